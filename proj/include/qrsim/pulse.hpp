#pragma once
// Transition gap tables for a species pair and compilation of the
// multi-tone flux/drive signals that realize the two-body gates, the
// single-spin rotations, and full protocol schedules.

#include "qrsim/circuit.hpp"
#include "qrsim/rabi.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace qrsim::pulse {

struct RwaPolicy {
    // Two distinct activated transitions closer than guard_factor * C fail
    // compilation: selectivity would silently degrade.
    double guard_factor = 100.0;
    // Effective strength must stay below ratio_max * margin.
    double ratio_max = 0.1;
    // Rotation drives: guard_factor * r must stay below every drive tone.
    double drive_guard_factor = 100.0;
};

// One candidate resonance the flux (or drive) can hit.
struct Candidate {
    enum class Kind { difference, sum, squeeze_a, squeeze_b, drive_a, drive_b };
    Kind kind;
    int a_upper = -1, a_lower = -1;  // species-A transition (when applicable)
    int b_upper = -1, b_lower = -1;  // species-B transition
    double omega = 0.0;              // rad/s
};

struct GapTable {
    int n_kept = 0;
    // delta[kj][ml]: sum gaps; big_delta: |difference| gaps. Indexed by
    // flattened (upper*n_kept + lower) on species A and B respectively;
    // entries without chi support are NaN.
    std::vector<double> delta_flat;
    std::vector<double> big_delta_flat;
    std::vector<Candidate> candidates;

    double delta(int a_upper, int a_lower, int b_upper, int b_lower) const;
    double big_delta(int a_upper, int a_lower, int b_upper, int b_lower) const;
    // Minimum spacing between any two distinct activated-candidate
    // frequencies (the XY/XX tone targets).
    double min_candidate_spacing() const;
};

struct CompiledGate {
    circuit::FluxSignal signal;
    double strength = 0.0;     // effective C, rad/s
    double f = 0.0;            // dimensionless drive parameter
    double margin = 0.0;       // min distance from any tone to a non-target candidate
    double rwa_ratio = 0.0;    // strength / margin
    std::string note;
};

struct DriveTone {
    double omega_amp = 0.0;  // Rabi amplitude Omega, rad/s
    double mu = 0.0;         // tone frequency, rad/s
    double phase = 0.0;
};

// Two-tone classical drive realizing r(Sx cos phi + Sy sin phi) on one site.
struct DriveSignal {
    std::array<DriveTone, 2> tones;
    double r = 0.0;
    double phi = 0.0;
    double duration = 0.0;  // pi/(2r)

    double eval(double t) const;
    double max_omega() const;
};

enum class SegmentKind { xy, xx, rot_x, rot_x_dag, rot_y, rot_y_dag, idle, ising };

const char* segment_kind_name(SegmentKind kind);

struct Segment {
    SegmentKind kind = SegmentKind::idle;
    double strength = 0.0;   // C for gates, r for rotations, J for ising
    double duration = 0.0;
    double field_b = 0.0;    // transverse drive strength for ising
    std::optional<circuit::FluxSignal> flux;  // same signal on every SQUID
    std::optional<DriveSignal> drive_a;       // per-species rotation drives
    std::optional<DriveSignal> drive_b;
};

struct GateSchedule {
    std::vector<Segment> segments;
    double total_duration = 0.0;
    int n_sites = 0;
    int segments_per_step = 0;  // 0 for analog schedules
    int n_steps = 0;
    // Heisenberg metadata: couplings of the simulated model.
    double lambda_x = 0.0, lambda_y = 0.0, lambda_z = 0.0;
    std::string note;

    std::string to_json() const;
};

class PulseCompiler {
public:
    PulseCompiler(const rabi::DressedSite& site_a, const rabi::DressedSite& site_b,
                  double q_a, double q_b, RwaPolicy policy = {});

    const GapTable& gaps() const { return gaps_; }
    double coupling_scale() const;  // sqrt(Q_A Q_B)

    // Margin of the canonical tone sets, independent of the drive strength.
    double xy_margin() const;
    double xx_margin() const;
    double rotation_margin() const;

    // Four tones on the difference gaps; effective C_xy = f*sqrt(Q_A Q_B)
    // acting as C(SxSx + SySy) per bond.
    CompiledGate compile_xy(double f) const;
    // Eight tones (difference + sum gaps) at half amplitude; effective
    // C_x = f*sqrt(Q_A Q_B) acting as C SxSx per bond.
    CompiledGate compile_xx(double f) const;
    // Two-tone drive on the given species ('A' or 'B').
    DriveSignal compile_rotation(char species, double r, double phi) const;

    GateSchedule schedule_heisenberg(double t, int n_o, double c_xy, double c_yz,
                                     double c_zx, double r, int n_sites) const;
    GateSchedule schedule_xxz(double t, int n_o, double c_xy, double c_z, double r,
                              int n_sites) const;
    // r is accepted for interface uniformity; the analog protocol emits no
    // rotation segments.
    GateSchedule schedule_ising(double t, double j, double b, double r,
                                int n_sites) const;

private:
    const rabi::DressedSite& site_a_;
    const rabi::DressedSite& site_b_;
    double q_a_, q_b_;
    RwaPolicy policy_;
    GapTable gaps_;

    struct ToneSpec {
        int a_upper, a_lower, b_upper, b_lower;
        bool sum_gap;
        double omega;
        double chi_product;
    };
    std::vector<ToneSpec> xy_tone_specs() const;
    std::vector<ToneSpec> xx_tone_specs() const;
    double margin_of(const std::vector<ToneSpec>& tones) const;

    Segment make_xy_segment(double c, double duration) const;
    Segment make_xx_segment(double c, double duration) const;
    Segment make_rotation_segment(SegmentKind kind, double r) const;
};

GapTable build_gap_table(const rabi::DressedSite& site_a, const rabi::DressedSite& site_b);

} // namespace qrsim::pulse
