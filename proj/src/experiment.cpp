#include "qrsim/experiment.hpp"

#include "qrsim/constants.hpp"
#include "qrsim/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qrsim::harness {

namespace {

using cxd = std::complex<double>;

rabi::QrsParams species_params(const SpeciesConfig& sc, int n_fock, char tag) {
    rabi::QrsParams p;
    p.omega_q = sc.omega_q;
    p.omega_r = sc.omega_r;
    p.g = sc.g;
    p.n_fock = n_fock;
    p.species = tag;
    return p;
}

// Map a 3^N product-basis index to the matching n_kept^N index.
int embed_index(int idx3, int n_sites, int n_kept) {
    int digits[16];
    for (int s = n_sites - 1; s >= 0; --s) {
        digits[s] = idx3 % 3;
        idx3 /= 3;
    }
    int out = 0;
    for (int s = 0; s < n_sites; ++s) out = out * n_kept + digits[s];
    return out;
}

Eigen::VectorXcd embed_state(const Eigen::VectorXcd& phi, int n_sites, int n_kept) {
    if (n_kept == 3) return phi;
    int dim = 1;
    for (int s = 0; s < n_sites; ++s) dim *= n_kept;
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
    for (int i = 0; i < phi.size(); ++i)
        out(embed_index(i, n_sites, n_kept)) = phi(i);
    return out;
}

} // namespace

std::unique_ptr<BuiltSystem> build_system(const ExperimentConfig& cfg) {
    auto sys = std::make_unique<BuiltSystem>();
    double p, q;
    if (cfg.p_override >= 0.0 && cfg.q_override >= 0.0) {
        p = cfg.p_override;
        q = cfg.q_override;
    } else {
        const circuit::PQ pq = circuit::effective_pq(cfg.circuit_params);
        p = cfg.p_override >= 0.0 ? cfg.p_override : pq.p;
        q = cfg.q_override >= 0.0 ? cfg.q_override : pq.q;
    }
    sys->p = p;
    sys->q = q;
    // Canonical SQUID environment of an adjacent pair: each edge site sees
    // one SQUID.
    sys->site_a = rabi::make_dressed_site(
        species_params(cfg.species_a, cfg.truncation.n_fock, 'A'),
        cfg.truncation.n_kept, 0.0, p);
    sys->site_b = rabi::make_dressed_site(
        species_params(cfg.species_b, cfg.truncation.n_fock, 'B'),
        cfg.truncation.n_kept, p, 0.0);
    sys->compiler.emplace(sys->site_a, sys->site_b, q, q, cfg.rwa);
    return sys;
}

ResolvedProtocol resolve_protocol(const ExperimentConfig& cfg, double coupling_scale) {
    const auto& p = cfg.protocol;
    ResolvedProtocol out;
    out.c_xy = p.c_xy >= 0.0 ? p.c_xy : p.f_xy * coupling_scale;
    out.c_yz = p.c_yz >= 0.0 ? p.c_yz : p.f_yz * coupling_scale;
    out.c_zx = p.c_zx >= 0.0 ? p.c_zx : p.f_zx * coupling_scale;
    out.c_z = p.c_z >= 0.0 ? p.c_z : p.f_z * coupling_scale;
    out.j = p.j >= 0.0 ? p.j : p.f_ising * coupling_scale;
    out.b = p.b >= 0.0 ? p.b : p.f_b * coupling_scale;
    return out;
}

pulse::GateSchedule build_schedule(const ExperimentConfig& cfg, const BuiltSystem& sys) {
    const ResolvedProtocol rp = resolve_protocol(cfg, sys.compiler->coupling_scale());
    const auto& p = cfg.protocol;
    if (p.kind == "heisenberg")
        return sys.compiler->schedule_heisenberg(p.t, p.n_o, rp.c_xy, rp.c_yz, rp.c_zx,
                                                 p.r, cfg.n_sites);
    if (p.kind == "xxz")
        return sys.compiler->schedule_xxz(p.t, p.n_o, rp.c_xy, rp.c_z, p.r, cfg.n_sites);
    if (p.kind == "ising")
        return sys.compiler->schedule_ising(p.t, rp.j, rp.b, p.r, cfg.n_sites);
    throw std::invalid_argument("unknown protocol kind: " + p.kind);
}

spin1::ModelSpec oracle_spec(const ExperimentConfig& cfg, const BuiltSystem& sys) {
    const ResolvedProtocol rp = resolve_protocol(cfg, sys.compiler->coupling_scale());
    spin1::ModelSpec spec;
    spec.n_sites = cfg.n_sites;
    if (cfg.protocol.kind == "heisenberg") {
        spec.kind = spin1::ModelKind::heisenberg;
        spec.lambda_x = rp.c_xy + rp.c_zx;
        spec.lambda_y = rp.c_xy + rp.c_yz;
        spec.lambda_z = rp.c_yz + rp.c_zx;
    } else if (cfg.protocol.kind == "xxz") {
        spec.kind = spin1::ModelKind::xxz;
        spec.lambda_x = rp.c_xy;
        spec.lambda_y = rp.c_xy;
        spec.lambda_z = rp.c_z;
    } else if (cfg.protocol.kind == "ising") {
        spec.kind = spin1::ModelKind::ising;
        spec.j = rp.j;
        spec.b = rp.b;
    } else {
        throw std::invalid_argument("unknown protocol kind: " + cfg.protocol.kind);
    }
    return spec;
}

FidelityReport run_experiment(const ExperimentConfig& cfg) {
    auto sys = build_system(cfg);
    pulse::GateSchedule schedule = build_schedule(cfg, *sys);

    // Exact target dynamics, diagonalized once.
    const spin1::ModelSpec spec = oracle_spec(cfg, *sys);
    const Eigen::MatrixXcd h_model = spin1::model_hamiltonian(spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h_model);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("run_experiment: oracle diagonalization failed");
    const Eigen::MatrixXcd evec = es.eigenvectors();
    const Eigen::VectorXd eval = es.eigenvalues();

    // Sampling plan: protocol-step boundaries (analog runs subdivide the
    // single segment into equal slices).
    pulse::GateSchedule run_schedule = schedule;
    std::vector<int> record_after;
    std::vector<double> model_times;
    if (cfg.protocol.kind == "ising") {
        const int n_sub = std::max(1, cfg.sampling.ising_samples);
        const pulse::Segment proto = schedule.segments.front();
        run_schedule.segments.assign(n_sub, proto);
        for (auto& seg : run_schedule.segments) seg.duration = proto.duration / n_sub;
        for (int i = 0; i < n_sub; ++i) {
            record_after.push_back(i);
            model_times.push_back((i + 1) * proto.duration / n_sub);
        }
    } else {
        const int spp = schedule.segments_per_step;
        for (int k = 1; k <= schedule.n_steps; ++k) {
            record_after.push_back(k * spp - 1);
            model_times.push_back(k * cfg.protocol.t / schedule.n_steps);
        }
    }
    std::vector<double> wall_times;
    {
        double acc = 0.0;
        std::size_t next = 0;
        for (int i = 0; i < static_cast<int>(run_schedule.segments.size()); ++i) {
            acc += run_schedule.segments[i].duration;
            if (next < record_after.size() && record_after[next] == i) {
                wall_times.push_back(acc);
                ++next;
            }
        }
    }

    // Dissipators from per-position dressed tables.
    const int nk_dyn = cfg.truncation.n_kept_dynamics;
    const dyn::ChainBasis basis{cfg.n_sites, nk_dyn};
    dyn::DissipatorSet diss;
    std::vector<rabi::DressedSite> position_sites;
    if (cfg.dissipation.enabled) {
        position_sites.reserve(cfg.n_sites);
        for (int i = 0; i < cfg.n_sites; ++i) {
            const bool is_a = (i % 2 == 0);
            const double p_left = i > 0 ? sys->p : 0.0;
            const double p_right = i + 1 < cfg.n_sites ? sys->p : 0.0;
            position_sites.push_back(rabi::make_dressed_site(
                species_params(is_a ? cfg.species_a : cfg.species_b,
                               cfg.truncation.n_fock, is_a ? 'A' : 'B'),
                cfg.truncation.n_kept, p_left, p_right));
        }
        std::vector<const rabi::DressedSite*> ptrs;
        for (const auto& s : position_sites) ptrs.push_back(&s);
        diss = dyn::build_dissipators(ptrs, cfg.dissipation.kappa_c,
                                      cfg.dissipation.kappa_x, cfg.dissipation.kappa_z,
                                      cfg.dissipation.temperature);
    }
    const bool dissipative = cfg.dissipation.enabled && !diss.empty();

    dyn::EffectiveEvolver evolver(basis, dissipative ? &diss : nullptr);
    evolver.warm(run_schedule, dissipative);

    const int n_states = cfg.sampling.n_states;
    const int n_samples = static_cast<int>(record_after.size());
    const int dim3 = static_cast<int>(h_model.rows());
    std::vector<std::vector<double>> fid(n_states, std::vector<double>(n_samples));
    std::vector<std::vector<double>> leak(n_states, std::vector<double>(n_samples));
    std::vector<double> state_trace_drift(n_states, 0.0);
    std::vector<double> state_min_eig(n_states, 1.0);

    auto process_state = [&](int idx) {
        const Eigen::VectorXcd phi0 = spin1::haar_random_state(dim3, cfg.sampling.seed + idx);
        const Eigen::VectorXcd coeff = evec.adjoint() * phi0;

        std::vector<dyn::ChainState> recorded;
        if (dissipative) {
            const Eigen::VectorXcd psi0 = embed_state(phi0, cfg.n_sites, nk_dyn);
            recorded = evolver.run(run_schedule,
                                   dyn::ChainState::pure(basis, psi0).to_density(),
                                   record_after);
        } else {
            const Eigen::VectorXcd psi0 = embed_state(phi0, cfg.n_sites, nk_dyn);
            recorded =
                evolver.run(run_schedule, dyn::ChainState::pure(basis, psi0), record_after);
        }

        for (int k = 0; k < n_samples; ++k) {
            Eigen::VectorXcd sigma(dim3);
            for (int i = 0; i < dim3; ++i) {
                const double th = -eval(i) * model_times[k];
                sigma(i) = coeff(i) * cxd{std::cos(th), std::sin(th)};
            }
            sigma = evec * sigma;
            const Eigen::VectorXcd sigma_emb = embed_state(sigma, cfg.n_sites, nk_dyn);
            if (dissipative) {
                const auto& rho = recorded[k].rho;
                const double val =
                    std::max(0.0, (sigma_emb.adjoint() * rho * sigma_emb)(0, 0).real());
                fid[idx][k] = std::sqrt(val);
                const double tr = rho.trace().real();
                state_trace_drift[idx] = std::max(state_trace_drift[idx], std::abs(tr - 1.0));
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> res(rho,
                                                                    Eigen::EigenvaluesOnly);
                state_min_eig[idx] = std::min(state_min_eig[idx], res.eigenvalues().minCoeff());
            } else {
                fid[idx][k] = std::abs(sigma_emb.dot(recorded[k].psi));
            }
            leak[idx][k] = dyn::leakage(recorded[k]);
        }
    };

    const int n_threads = std::max(1, std::min(cfg.threads, n_states));
    if (n_threads == 1) {
        for (int i = 0; i < n_states; ++i) process_state(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> cursor{0};
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    const int i = cursor.fetch_add(1);
                    if (i >= n_states) break;
                    process_state(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    FidelityReport report;
    report.total_duration_s = schedule.total_duration;
    report.config_hash = cfg.config_hash;
    report.seed = cfg.sampling.seed;
    report.n_states = n_states;
    report.omitted_dissipation_rate = diss.omitted_rate(nk_dyn);

    report.time_s.push_back(0.0);
    report.fid_mean.push_back(1.0);
    report.fid_min.push_back(1.0);
    report.fid_max.push_back(1.0);
    report.fid_stderr.push_back(0.0);
    report.leakage_mean.push_back(0.0);
    for (int k = 0; k < n_samples; ++k) {
        double sum = 0.0, lo = 2.0, hi = -1.0, lsum = 0.0;
        for (int i = 0; i < n_states; ++i) {
            sum += fid[i][k];
            lo = std::min(lo, fid[i][k]);
            hi = std::max(hi, fid[i][k]);
            lsum += leak[i][k];
        }
        const double mean = sum / n_states;
        double var = 0.0;
        for (int i = 0; i < n_states; ++i) var += (fid[i][k] - mean) * (fid[i][k] - mean);
        const double stderr_v =
            n_states > 1 ? std::sqrt(var / (n_states - 1.0) / n_states) : 0.0;
        report.time_s.push_back(wall_times[k]);
        report.fid_mean.push_back(mean);
        report.fid_min.push_back(lo);
        report.fid_max.push_back(hi);
        report.fid_stderr.push_back(stderr_v);
        report.leakage_mean.push_back(lsum / n_states);
    }

    for (int i = 0; i < n_states; ++i) {
        report.max_trace_drift = std::max(report.max_trace_drift, state_trace_drift[i]);
        report.min_eigenvalue = std::min(report.min_eigenvalue, state_min_eig[i]);
    }
    if (dissipative) {
        if (report.max_trace_drift > 1e-8)
            throw std::runtime_error("run_experiment: trace drift above 1e-8");
        if (report.min_eigenvalue < -1e-6)
            throw std::runtime_error("run_experiment: density eigenvalue below -1e-6");
    }
    return report;
}

// ------------------------------------------------------- gate validation --

namespace {

// Largest second-order level shift the static coupler imprints on the
// two-site spin-1 block; the strength-independent systematic the scaling
// study must stay clear of.
double static_dispersive_scale(const ExperimentConfig& cfg) {
    ExperimentConfig scfg = cfg;
    scfg.truncation.n_kept = cfg.validation.n_kept_full;
    auto sys = build_system(scfg);
    if (sys->p == 0.0) return 0.0;
    circuit::ChainConfig chain;
    chain.sites = {&sys->site_a, &sys->site_b};
    chain.p = sys->p;
    chain.q = sys->q;
    const Eigen::MatrixXd h = circuit::build_static_chain(chain);
    const int nk = cfg.validation.n_kept_full;
    double worst = 0.0;
    for (int a = 0; a < h.rows(); ++a) {
        const int la = a / nk, lb = a % nk;
        if (la > 2 || lb > 2) continue;
        double shift = 0.0;
        for (int b = 0; b < h.rows(); ++b) {
            if (b == a || h(a, b) == 0.0) continue;
            shift += h(a, b) * h(a, b) / (h(a, a) - h(b, b));
        }
        worst = std::max(worst, std::abs(shift));
    }
    return worst;
}

} // namespace

GateMarginReport validate_gate(const ExperimentConfig& cfg, const std::string& gate) {
    ExperimentConfig vcfg = cfg;
    vcfg.truncation.n_kept = cfg.validation.n_kept_full;
    if (!cfg.validation.include_static_coupling) vcfg.p_override = 0.0;
    auto sys = build_system(vcfg);
    const auto& compiler = *sys->compiler;
    const double scale = compiler.coupling_scale();

    GateMarginReport report;
    report.gate = gate;
    report.config_hash = cfg.config_hash;
    report.static_coupling_included = cfg.validation.include_static_coupling;
    report.static_shift_scale = static_dispersive_scale(cfg);

    circuit::ChainConfig chain;
    chain.sites = {&sys->site_a, &sys->site_b};
    chain.p = sys->p;
    chain.q = sys->q;

    std::vector<circuit::FluxSignal> signals(1);
    std::vector<std::optional<pulse::DriveSignal>> drives;
    pulse::Segment eff_segment;

    const double ratio = cfg.validation.ratio;
    double strength = 0.0;
    double gate_time = 0.0;

    if (gate == "xy" || gate == "xx") {
        const double margin = gate == "xy" ? compiler.xy_margin() : compiler.xx_margin();
        strength = ratio * margin;
        gate_time = strength > 0.0 ? M_PI / (4.0 * strength) : 1e-9;
        const pulse::CompiledGate compiled = gate == "xy"
                                                 ? compiler.compile_xy(strength / scale)
                                                 : compiler.compile_xx(strength / scale);
        signals[0] = compiled.signal;
        report.margin = margin;
        for (const auto& tone : compiled.signal.tones)
            report.tone_omegas.push_back(tone.omega);
        eff_segment.kind = gate == "xy" ? pulse::SegmentKind::xy : pulse::SegmentKind::xx;
        eff_segment.strength = strength;
        eff_segment.duration = gate_time;
    } else if (gate == "rot") {
        const double margin = compiler.rotation_margin();
        strength = ratio * margin;
        if (!(strength > 0.0))
            throw std::invalid_argument("validate_gate: rotation needs ratio > 0");
        gate_time = M_PI / (2.0 * strength);
        drives.resize(2);
        drives[0] = compiler.compile_rotation('A', strength, 0.0);
        drives[1] = compiler.compile_rotation('B', strength, 0.0);
        report.margin = margin;
        report.tone_omegas = {drives[0]->tones[0].mu, drives[0]->tones[1].mu,
                              drives[1]->tones[0].mu, drives[1]->tones[1].mu};
        eff_segment.kind = pulse::SegmentKind::rot_x;
        eff_segment.strength = strength;
        eff_segment.duration = gate_time;
    } else {
        throw std::invalid_argument("validate_gate: gate must be xy, xx or rot");
    }

    report.ratio = report.margin > 0.0 ? strength / report.margin : 0.0;
    report.strength = strength;
    report.gate_time = gate_time;

    dyn::FluxDrivenModel model(chain, signals, drives);
    report.peak_flux = model.peak_flux();

    const dyn::ChainBasis basis{2, cfg.validation.n_kept_full};
    dyn::EffectiveEvolver evolver(basis);

    dyn::PropagationOptions opts;
    opts.abs_tol = cfg.validation.abs_tol;
    opts.rel_tol = 0.0;

    // Residual off-resonant terms beat against the gate at the margin
    // detuning; sampling a single instant would alias that oscillation, so
    // the error is averaged over one period of it around the gate time.
    std::vector<double> sample_times{gate_time};
    if (report.margin > 0.0 && strength > 0.0) {
        const int n_window = 8;
        const double period = constants::two_pi / report.margin;
        for (int k = 1; k < n_window; ++k)
            sample_times.push_back(gate_time + period * k / n_window);
    }

    const Eigen::MatrixXcd h_eff = evolver.segment_hamiltonian(eff_segment);
    std::vector<Eigen::MatrixXcd> u_eff;
    for (double t : sample_times) u_eff.push_back(linalg::unitary_of(h_eff, t));

    double infid_sum = 0.0, leak_sum = 0.0;
    const int n_states = std::max(1, cfg.validation.n_states);
    for (int i = 0; i < n_states; ++i) {
        const Eigen::VectorXcd phi0 = spin1::haar_random_state(9, cfg.validation.seed + i);
        const Eigen::VectorXcd psi0 = embed_state(phi0, 2, cfg.validation.n_kept_full);
        const dyn::ChainState start = dyn::ChainState::pure(basis, psi0);
        dyn::Trajectory traj = dyn::propagate_unitary(model, start, sample_times, opts);
        double infid_state = 0.0, leak_state = 0.0;
        for (std::size_t k = 0; k < sample_times.size(); ++k) {
            const Eigen::VectorXcd psi_eff = u_eff[k] * psi0;
            infid_state += 1.0 - std::abs(psi_eff.dot(traj.states[k].psi));
            leak_state += dyn::leakage(traj.states[k]);
        }
        infid_sum += infid_state / sample_times.size();
        leak_sum += leak_state / sample_times.size();
        report.norm_drift = std::max(report.norm_drift, traj.max_norm_drift);
    }
    report.infidelity = infid_sum / n_states;
    report.leakage = leak_sum / n_states;
    return report;
}

std::vector<GateMarginReport> sweep_gate(const ExperimentConfig& cfg,
                                         const std::string& gate,
                                         const std::vector<double>& ratios) {
    std::vector<GateMarginReport> out;
    for (double ratio : ratios) {
        ExperimentConfig c = cfg;
        c.validation.ratio = ratio;
        out.push_back(validate_gate(c, gate));
    }
    return out;
}

std::string GateMarginReport::to_json() const {
    nlohmann::json j;
    j["gate"] = gate;
    j["ratio"] = ratio;
    j["strength_rad_s"] = strength;
    j["margin_rad_s"] = margin;
    j["gate_time_s"] = gate_time;
    j["infidelity"] = infidelity;
    j["leakage"] = leakage;
    j["peak_flux"] = peak_flux;
    j["norm_drift"] = norm_drift;
    j["static_shift_scale_rad_s"] = static_shift_scale;
    j["static_coupling_included"] = static_coupling_included;
    j["tone_omegas_rad_s"] = tone_omegas;
    char hashbuf[20];
    std::snprintf(hashbuf, sizeof(hashbuf), "%016llx",
                  static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hashbuf;
    return j.dump(2);
}

} // namespace qrsim::harness
