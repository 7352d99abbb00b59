#include "qrsim/pulse.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qrsim::pulse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int flat_index(int n_kept, int au, int al, int bu, int bl) {
    return ((au * n_kept + al) * n_kept + bu) * n_kept + bl;
}

bool flux_kind(Candidate::Kind kind) {
    return kind == Candidate::Kind::difference || kind == Candidate::Kind::sum ||
           kind == Candidate::Kind::squeeze_a || kind == Candidate::Kind::squeeze_b;
}

} // namespace

double GapTable::delta(int au, int al, int bu, int bl) const {
    return delta_flat[flat_index(n_kept, au, al, bu, bl)];
}

double GapTable::big_delta(int au, int al, int bu, int bl) const {
    return big_delta_flat[flat_index(n_kept, au, al, bu, bl)];
}

double GapTable::min_candidate_spacing() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!flux_kind(candidates[i].kind)) continue;
        for (std::size_t j = i + 1; j < candidates.size(); ++j) {
            if (!flux_kind(candidates[j].kind)) continue;
            const double d = std::abs(candidates[i].omega - candidates[j].omega);
            if (d > 0.0 && d < best) best = d;
        }
    }
    return best;
}

GapTable build_gap_table(const rabi::DressedSite& site_a, const rabi::DressedSite& site_b) {
    if (site_a.n_kept() != site_b.n_kept())
        throw std::invalid_argument("gap_table: sites disagree on n_kept");
    const int nk = site_a.n_kept();
    if (nk < 3) throw std::invalid_argument("gap_table: need n_kept >= 3");

    GapTable table;
    table.n_kept = nk;
    table.delta_flat.assign(static_cast<std::size_t>(nk) * nk * nk * nk, kNaN);
    table.big_delta_flat.assign(static_cast<std::size_t>(nk) * nk * nk * nk, kNaN);

    for (int au = 1; au < nk; ++au) {
        for (int al = 0; al < au; ++al) {
            if (site_a.chi(au, al) == 0.0) continue;
            const double wa = site_a.gap(au, al);
            for (int bu = 1; bu < nk; ++bu) {
                for (int bl = 0; bl < bu; ++bl) {
                    if (site_b.chi(bu, bl) == 0.0) continue;
                    const double wb = site_b.gap(bu, bl);
                    const int idx = flat_index(nk, au, al, bu, bl);
                    table.delta_flat[idx] = wb + wa;
                    table.big_delta_flat[idx] = std::abs(wb - wa);
                    table.candidates.push_back({Candidate::Kind::difference, au, al,
                                                bu, bl, std::abs(wb - wa)});
                    table.candidates.push_back({Candidate::Kind::sum, au, al, bu, bl,
                                                wb + wa});
                }
            }
        }
    }
    // Single-site squeezing resonances (parity-preserving z transitions) and
    // single-site drive resonances (parity-flipping chi transitions).
    for (int u = 1; u < nk; ++u) {
        for (int l = 0; l < u; ++l) {
            if (site_a.z(u, l) != 0.0)
                table.candidates.push_back({Candidate::Kind::squeeze_a, u, l, -1, -1,
                                            site_a.gap(u, l)});
            if (site_b.z(u, l) != 0.0)
                table.candidates.push_back({Candidate::Kind::squeeze_b, -1, -1, u, l,
                                            site_b.gap(u, l)});
            if (site_a.chi(u, l) != 0.0)
                table.candidates.push_back({Candidate::Kind::drive_a, u, l, -1, -1,
                                            site_a.gap(u, l)});
            if (site_b.chi(u, l) != 0.0)
                table.candidates.push_back({Candidate::Kind::drive_b, -1, -1, u, l,
                                            site_b.gap(u, l)});
        }
    }
    return table;
}

double DriveSignal::eval(double t) const {
    double v = 0.0;
    for (const auto& tone : tones)
        v += tone.omega_amp * std::cos(tone.mu * t + tone.phase);
    return v;
}

double DriveSignal::max_omega() const {
    return std::max(std::abs(tones[0].mu), std::abs(tones[1].mu));
}

const char* segment_kind_name(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::xy: return "xy";
        case SegmentKind::xx: return "xx";
        case SegmentKind::rot_x: return "rot_x";
        case SegmentKind::rot_x_dag: return "rot_x_dag";
        case SegmentKind::rot_y: return "rot_y";
        case SegmentKind::rot_y_dag: return "rot_y_dag";
        case SegmentKind::idle: return "idle";
        case SegmentKind::ising: return "ising";
    }
    return "?";
}

PulseCompiler::PulseCompiler(const rabi::DressedSite& site_a,
                             const rabi::DressedSite& site_b, double q_a, double q_b,
                             RwaPolicy policy)
    : site_a_(site_a), site_b_(site_b), q_a_(q_a), q_b_(q_b), policy_(policy),
      gaps_(build_gap_table(site_a, site_b)) {
    if (q_a < 0.0 || q_b < 0.0)
        throw std::invalid_argument("PulseCompiler: Q must be >= 0");
}

double PulseCompiler::coupling_scale() const { return std::sqrt(q_a_ * q_b_); }

std::vector<PulseCompiler::ToneSpec> PulseCompiler::xy_tone_specs() const {
    std::vector<ToneSpec> tones;
    const int pairs[4][4] = {{1, 0, 1, 0}, {1, 0, 2, 1}, {2, 1, 1, 0}, {2, 1, 2, 1}};
    for (const auto& p : pairs) {
        const double chi_prod = site_a_.chi(p[0], p[1]) * site_b_.chi(p[2], p[3]);
        if (chi_prod == 0.0)
            throw std::invalid_argument("compile: vanishing chi matrix element");
        tones.push_back({p[0], p[1], p[2], p[3], false,
                         gaps_.big_delta(p[0], p[1], p[2], p[3]), chi_prod});
    }
    return tones;
}

std::vector<PulseCompiler::ToneSpec> PulseCompiler::xx_tone_specs() const {
    std::vector<ToneSpec> tones = xy_tone_specs();
    const int pairs[4][4] = {{1, 0, 1, 0}, {1, 0, 2, 1}, {2, 1, 1, 0}, {2, 1, 2, 1}};
    for (const auto& p : pairs) {
        const double chi_prod = site_a_.chi(p[0], p[1]) * site_b_.chi(p[2], p[3]);
        tones.push_back({p[0], p[1], p[2], p[3], true,
                         gaps_.delta(p[0], p[1], p[2], p[3]), chi_prod});
    }
    return tones;
}

double PulseCompiler::margin_of(const std::vector<ToneSpec>& tones) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tone : tones) {
        for (const auto& cand : gaps_.candidates) {
            if (!flux_kind(cand.kind)) continue;
            const bool own =
                ((cand.kind == Candidate::Kind::difference && !tone.sum_gap) ||
                 (cand.kind == Candidate::Kind::sum && tone.sum_gap)) &&
                cand.a_upper == tone.a_upper && cand.a_lower == tone.a_lower &&
                cand.b_upper == tone.b_upper && cand.b_lower == tone.b_lower;
            if (own) continue;
            best = std::min(best, std::abs(tone.omega - cand.omega));
        }
    }
    return best;
}

double PulseCompiler::xy_margin() const { return margin_of(xy_tone_specs()); }
double PulseCompiler::xx_margin() const { return margin_of(xx_tone_specs()); }

double PulseCompiler::rotation_margin() const {
    double best = std::numeric_limits<double>::infinity();
    for (char species : {'A', 'B'}) {
        const auto& site = species == 'A' ? site_a_ : site_b_;
        const auto kind = species == 'A' ? Candidate::Kind::drive_a : Candidate::Kind::drive_b;
        for (int l = 1; l <= 2; ++l) {
            const double mu = site.gap(l, l - 1);
            for (const auto& cand : gaps_.candidates) {
                if (cand.kind != kind) continue;
                const int cu = species == 'A' ? cand.a_upper : cand.b_upper;
                const int cl = species == 'A' ? cand.a_lower : cand.b_lower;
                if (cu == l && cl == l - 1) continue;
                best = std::min(best, std::abs(mu - cand.omega));
            }
        }
    }
    return best;
}

CompiledGate PulseCompiler::compile_xy(double f) const {
    auto tones = xy_tone_specs();
    CompiledGate gate;
    gate.f = f;
    gate.strength = f * coupling_scale();
    gate.margin = margin_of(tones);
    gate.rwa_ratio = gate.margin > 0.0 ? std::abs(gate.strength) / gate.margin : 0.0;

    for (const auto& tone : tones) {
        if (!(tone.omega > 0.0))
            throw std::invalid_argument(
                "compile_xy: vanishing difference gap; the scheme requires two "
                "interleaved species with distinct spectra");
        gate.signal.tones.push_back({-f / tone.chi_product, tone.omega, 0.0});
    }
    const double guard = policy_.guard_factor * std::abs(gate.strength);
    for (std::size_t i = 0; i < tones.size(); ++i)
        for (std::size_t j = i + 1; j < tones.size(); ++j)
            if (std::abs(tones[i].omega - tones[j].omega) < guard)
                throw std::runtime_error(
                    "compile_xy: two activated transitions collide inside the "
                    "guard band; resonance ambiguity breaks selectivity");
    if (std::abs(gate.strength) >= policy_.ratio_max * gate.margin)
        throw std::runtime_error("compile_xy: C_xy too large for the RWA margin");
    return gate;
}

CompiledGate PulseCompiler::compile_xx(double f) const {
    auto tones = xx_tone_specs();
    CompiledGate gate;
    gate.f = f;
    gate.strength = f * coupling_scale();
    gate.margin = margin_of(tones);
    gate.rwa_ratio = gate.margin > 0.0 ? std::abs(gate.strength) / gate.margin : 0.0;
    gate.note = "sum-gap tones cover the four distinct transition pairs";

    for (const auto& tone : tones) {
        if (!(tone.omega > 0.0))
            throw std::invalid_argument(
                "compile_xx: vanishing gap; two distinct species required");
        gate.signal.tones.push_back({-0.5 * f / tone.chi_product, tone.omega, 0.0});
    }
    const double guard = policy_.guard_factor * std::abs(gate.strength);
    for (std::size_t i = 0; i < tones.size(); ++i)
        for (std::size_t j = i + 1; j < tones.size(); ++j)
            if (std::abs(tones[i].omega - tones[j].omega) < guard)
                throw std::runtime_error(
                    "compile_xx: activated transitions collide inside the guard band");
    if (std::abs(gate.strength) >= policy_.ratio_max * gate.margin)
        throw std::runtime_error("compile_xx: C_x too large for the RWA margin");
    return gate;
}

DriveSignal PulseCompiler::compile_rotation(char species, double r, double phi) const {
    if (!(r > 0.0)) throw std::invalid_argument("compile_rotation: r must be > 0");
    const auto& site = (species == 'A') ? site_a_ : site_b_;
    DriveSignal drive;
    drive.r = r;
    drive.phi = phi;
    drive.duration = M_PI / (2.0 * r);
    for (int l = 1; l <= 2; ++l) {
        const double chi = site.chi(l, l - 1);
        if (chi == 0.0)
            throw std::invalid_argument("compile_rotation: vanishing chi element");
        const double mu = site.gap(l, l - 1);
        if (policy_.drive_guard_factor * r >= mu)
            throw std::runtime_error(
                "compile_rotation: r too large relative to the drive frequency");
        drive.tones[l - 1] = {std::sqrt(2.0) * r / chi, mu, phi};
    }
    return drive;
}

Segment PulseCompiler::make_xy_segment(double c, double duration) const {
    Segment seg;
    seg.kind = SegmentKind::xy;
    seg.strength = c;
    seg.duration = duration;
    seg.flux = compile_xy(c / coupling_scale()).signal;
    return seg;
}

Segment PulseCompiler::make_xx_segment(double c, double duration) const {
    Segment seg;
    seg.kind = SegmentKind::xx;
    seg.strength = c;
    seg.duration = duration;
    seg.flux = compile_xx(c / coupling_scale()).signal;
    return seg;
}

Segment PulseCompiler::make_rotation_segment(SegmentKind kind, double r) const {
    double phi = 0.0;
    switch (kind) {
        case SegmentKind::rot_x: phi = 0.0; break;
        case SegmentKind::rot_x_dag: phi = M_PI; break;
        case SegmentKind::rot_y: phi = M_PI / 2.0; break;
        case SegmentKind::rot_y_dag: phi = 3.0 * M_PI / 2.0; break;
        default: throw std::invalid_argument("make_rotation_segment: not a rotation");
    }
    Segment seg;
    seg.kind = kind;
    seg.strength = r;
    seg.duration = M_PI / (2.0 * r);
    seg.drive_a = compile_rotation('A', r, phi);
    seg.drive_b = compile_rotation('B', r, phi);
    return seg;
}

GateSchedule PulseCompiler::schedule_heisenberg(double t, int n_o, double c_xy,
                                                double c_yz, double c_zx, double r,
                                                int n_sites) const {
    if (n_o < 1) throw std::invalid_argument("schedule_heisenberg: n_o must be >= 1");
    if (!(t > 0.0)) throw std::invalid_argument("schedule_heisenberg: t must be > 0");
    if (!(r > 0.0)) throw std::invalid_argument("schedule_heisenberg: r must be > 0");
    if (c_xy < 0.0 || c_yz < 0.0 || c_zx < 0.0)
        throw std::invalid_argument("schedule_heisenberg: strengths must be >= 0");
    if (n_sites < 2) throw std::invalid_argument("schedule_heisenberg: n_sites >= 2");

    const double tau = t / n_o;
    GateSchedule sched;
    sched.n_sites = n_sites;
    sched.segments_per_step = 7;
    sched.n_steps = n_o;
    sched.lambda_x = c_xy + c_zx;
    sched.lambda_y = c_xy + c_yz;
    sched.lambda_z = c_yz + c_zx;
    for (int step = 0; step < n_o; ++step) {
        sched.segments.push_back(make_rotation_segment(SegmentKind::rot_x_dag, r));
        sched.segments.push_back(make_xy_segment(c_zx, tau));
        sched.segments.push_back(make_rotation_segment(SegmentKind::rot_x, r));
        sched.segments.push_back(make_rotation_segment(SegmentKind::rot_y, r));
        sched.segments.push_back(make_xy_segment(c_yz, tau));
        sched.segments.push_back(make_rotation_segment(SegmentKind::rot_y_dag, r));
        sched.segments.push_back(make_xy_segment(c_xy, tau));
    }
    for (const auto& seg : sched.segments) sched.total_duration += seg.duration;
    return sched;
}

GateSchedule PulseCompiler::schedule_xxz(double t, int n_o, double c_xy, double c_z,
                                         double r, int n_sites) const {
    if (n_o < 1) throw std::invalid_argument("schedule_xxz: n_o must be >= 1");
    if (!(t > 0.0)) throw std::invalid_argument("schedule_xxz: t must be > 0");
    if (!(r > 0.0)) throw std::invalid_argument("schedule_xxz: r must be > 0");
    if (c_xy < 0.0 || c_z < 0.0)
        throw std::invalid_argument("schedule_xxz: strengths must be >= 0");
    if (n_sites < 2) throw std::invalid_argument("schedule_xxz: n_sites >= 2");

    const double tau = t / n_o;
    GateSchedule sched;
    sched.n_sites = n_sites;
    sched.segments_per_step = 4;
    sched.n_steps = n_o;
    sched.lambda_x = c_xy;
    sched.lambda_y = c_xy;
    sched.lambda_z = c_z;
    for (int step = 0; step < n_o; ++step) {
        sched.segments.push_back(make_rotation_segment(SegmentKind::rot_y, r));
        sched.segments.push_back(make_xx_segment(c_z, tau));
        sched.segments.push_back(make_rotation_segment(SegmentKind::rot_y_dag, r));
        sched.segments.push_back(make_xy_segment(c_xy, tau));
    }
    for (const auto& seg : sched.segments) sched.total_duration += seg.duration;
    return sched;
}

GateSchedule PulseCompiler::schedule_ising(double t, double j, double b, double r,
                                           int n_sites) const {
    (void)r;
    if (!(t > 0.0)) throw std::invalid_argument("schedule_ising: t must be > 0");
    if (j < 0.0 || b < 0.0)
        throw std::invalid_argument("schedule_ising: strengths must be >= 0");
    if (n_sites < 2) throw std::invalid_argument("schedule_ising: n_sites >= 2");

    GateSchedule sched;
    sched.n_sites = n_sites;
    sched.segments_per_step = 0;
    sched.n_steps = 1;
    Segment seg;
    seg.kind = SegmentKind::ising;
    seg.strength = j;
    seg.duration = t;
    seg.field_b = b;
    if (j > 0.0) seg.flux = compile_xx(j / coupling_scale()).signal;
    if (b > 0.0) {
        seg.drive_a = compile_rotation('A', b, 0.0);
        seg.drive_b = compile_rotation('B', b, 0.0);
    }
    sched.segments.push_back(std::move(seg));
    sched.total_duration = sched.segments.front().duration;
    return sched;
}

std::string GateSchedule::to_json() const {
    nlohmann::json root;
    root["n_sites"] = n_sites;
    root["n_steps"] = n_steps;
    root["segments_per_step"] = segments_per_step;
    root["total_duration_s"] = total_duration;
    root["lambda_x_rad_s"] = lambda_x;
    root["lambda_y_rad_s"] = lambda_y;
    root["lambda_z_rad_s"] = lambda_z;
    if (!note.empty()) root["note"] = note;
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& seg : segments) {
        nlohmann::json s;
        s["kind"] = segment_kind_name(seg.kind);
        s["strength_rad_s"] = seg.strength;
        s["duration_s"] = seg.duration;
        if (seg.field_b != 0.0) s["field_b_rad_s"] = seg.field_b;
        if (seg.flux) {
            nlohmann::json tones = nlohmann::json::array();
            for (const auto& tone : seg.flux->tones)
                tones.push_back({{"amplitude", tone.amplitude},
                                 {"omega_rad_s", tone.omega},
                                 {"phase_rad", tone.phase}});
            s["flux_tones"] = tones;
        }
        auto drive_json = [](const DriveSignal& d) {
            nlohmann::json tones = nlohmann::json::array();
            for (const auto& tone : d.tones)
                tones.push_back({{"omega_amp_rad_s", tone.omega_amp},
                                 {"mu_rad_s", tone.mu},
                                 {"phase_rad", tone.phase}});
            return tones;
        };
        if (seg.drive_a) s["drive_a_tones"] = drive_json(*seg.drive_a);
        if (seg.drive_b) s["drive_b_tones"] = drive_json(*seg.drive_b);
        segs.push_back(std::move(s));
    }
    root["segments"] = std::move(segs);
    return root.dump(2);
}

} // namespace qrsim::pulse
