#pragma once
// Propagation of chain states: the full flux-driven model in the
// interaction picture, compiled effective Hamiltonians applied segment by
// segment, and the dissipative master equation, with trace, positivity and
// leakage monitoring.

#include "qrsim/circuit.hpp"
#include "qrsim/pulse.hpp"
#include "qrsim/rabi.hpp"

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace qrsim::dyn {

using cxd = std::complex<double>;

struct ChainBasis {
    int n_sites = 0;
    int n_kept = 0;

    int dim() const {
        int d = 1;
        for (int s = 0; s < n_sites; ++s) d *= n_kept;
        return d;
    }
    int site_level(int index, int site) const;
    int site_stride(int site) const;
};

struct ChainState {
    ChainBasis basis;
    bool is_density = false;
    double time = 0.0;
    Eigen::VectorXcd psi;
    Eigen::MatrixXcd rho;

    static ChainState pure(ChainBasis basis, Eigen::VectorXcd psi, double time = 0.0);
    static ChainState density(ChainBasis basis, Eigen::MatrixXcd rho, double time = 0.0);
    ChainState to_density() const;
    void check_valid() const;  // norm/trace/hermiticity/positivity invariants
};

// Population outside the per-site {0,1,2} subspace.
double leakage(const ChainState& state);

// n = 1/(exp(hbar w / kB T) - 1); exactly 0 at T = 0.
double thermal_occupation(double omega, double temperature);

struct Channel {
    int site = 0;
    int upper = 0, lower = 0;  // dressed levels, upper > lower
    double gamma = 0.0;        // bare rate
    double omega = 0.0;        // transition frequency
    double rate_down = 0.0;    // gamma (1 + nbar)
    double rate_up = 0.0;      // gamma nbar
};

struct DissipatorSet {
    std::vector<Channel> channels;
    double temperature = 0.0;
    bool empty() const { return channels.empty(); }
    // Summed bare rate of channels outside an n_levels truncation.
    double omitted_rate(int n_levels) const;
};

// Gamma_kj = (w_kj kc / w_r) |chi_kj|^2 + (w_kj kx / w_q) |sx_kj|^2
//          + (w_kj kz / w_q) |sz_kj|^2 over kept k > j per site.
DissipatorSet build_dissipators(const std::vector<const rabi::DressedSite*>& sites,
                                double kappa_c, double kappa_x, double kappa_z,
                                double temperature);

enum class Method { rk4_adaptive, magnus2 };

struct PropagationOptions {
    Method method = Method::rk4_adaptive;
    // Accuracy budgets for the whole run; per-step acceptance is scaled by
    // h / t_span so the accumulated error tracks the budget.
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.0;      // 0: derived as (2 pi / omega_max)/20
    double fixed_step = 0.0;    // magnus2 only; 0: use max_step
};

// Time-dependent interaction-picture Hamiltonian of the flux-driven chain.
// Diagonal dressed energies form the frame; every remaining term is a real
// constant matrix times a scalar signal, so assembly is a handful of axpys
// plus a phase conjugation.
class FluxDrivenModel {
public:
    FluxDrivenModel(const circuit::ChainConfig& chain,
                    std::vector<circuit::FluxSignal> squid_signals,
                    std::vector<std::optional<pulse::DriveSignal>> site_drives = {});

    int dim() const { return dim_; }
    double max_omega() const;   // fastest phase the integrator must resolve
    double peak_flux() const;   // linearization monitor
    const Eigen::VectorXd& frame_energies() const { return energies_; }

    Eigen::MatrixXcd hamiltonian(double t) const;

    struct Workspace {
        std::vector<double> h_real;
        std::vector<cxd> phase;
        std::vector<cxd> scratch;
    };
    Workspace make_workspace() const;
    // out = -i H_I(t) in
    void apply(double t, const cxd* in, cxd* out, Workspace& ws) const;

private:
    struct Term {
        Eigen::MatrixXd op;
        int kind = 0;    // 0 static, 1 flux, 2 drive
        int index = 0;   // SQUID or site index
        double scale = 1.0;
    };
    int dim_ = 0;
    Eigen::VectorXd energies_;
    std::vector<Term> terms_;
    std::vector<circuit::FluxSignal> signals_;
    std::vector<std::optional<pulse::DriveSignal>> drives_;

    double coeff(const Term& term, double t) const;
    void assemble_real(double t, double* out) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ChainState> states;
    double max_norm_drift = 0.0;   // pure runs
    double max_trace_drift = 0.0;  // density runs
    double min_eigenvalue = 0.0;   // density runs
    long rhs_evaluations = 0;
};

Trajectory propagate_unitary(const FluxDrivenModel& model, const ChainState& psi0,
                             const std::vector<double>& sample_times,
                             const PropagationOptions& opts);

// Constant-H variant used by oracles and tests.
Trajectory propagate_unitary_const(const Eigen::MatrixXcd& h, const ChainState& psi0,
                                   const std::vector<double>& sample_times,
                                   const PropagationOptions& opts);

Trajectory propagate_lindblad(const FluxDrivenModel& model, const DissipatorSet& diss,
                              const ChainState& rho0,
                              const std::vector<double>& sample_times,
                              const PropagationOptions& opts);

Trajectory propagate_lindblad_const(const Eigen::MatrixXcd& h, const DissipatorSet& diss,
                                    const ChainState& rho0,
                                    const std::vector<double>& sample_times,
                                    const PropagationOptions& opts);

// Segment-level evolution of a compiled schedule under the effective
// Hamiltonians. Closed runs apply exact exponentials; dissipative runs
// exponentiate the full Lindblad generator per distinct segment when the
// superoperator fits in memory, falling back to adaptive integration.
//
// Caches are filled on first use. warm() precomputes every operator a
// schedule needs, after which run() only reads shared state and may be
// called from several threads on distinct ChainStates.
class EffectiveEvolver {
public:
    EffectiveEvolver(ChainBasis basis, const DissipatorSet* dissipators = nullptr,
                     int superop_dim_limit = 2048);

    Eigen::MatrixXcd segment_hamiltonian(const pulse::Segment& seg) const;

    void warm(const pulse::GateSchedule& schedule, bool density_mode);

    // Applies segments in order; records the state after each segment index
    // listed in record_after (sorted). The initial state is not recorded.
    std::vector<ChainState> run(const pulse::GateSchedule& schedule,
                                const ChainState& initial,
                                const std::vector<int>& record_after);

private:
    ChainBasis basis_;
    const DissipatorSet* diss_;
    int superop_limit_;
    Eigen::MatrixXcd sx_sum_, sy_sum_, xx_bond_, xy_bond_;
    struct Key {
        int kind;
        double strength, duration, field;
        bool operator<(const Key& o) const;
    };
    std::map<Key, Eigen::MatrixXcd> unitary_cache_;
    std::map<Key, Eigen::MatrixXcd> superop_cache_;

    bool use_superop(const ChainState& state) const;
    const Eigen::MatrixXcd& segment_unitary(const pulse::Segment& seg);
    const Eigen::MatrixXcd& segment_superop(const pulse::Segment& seg);
    void apply_segment(const pulse::Segment& seg, ChainState& state);
};

// Dense Lindblad superoperator for constant H (column-major vec convention).
Eigen::MatrixXcd lindblad_superoperator(const Eigen::MatrixXcd& h,
                                        const DissipatorSet& diss,
                                        const ChainBasis& basis);

// Trajectory export, columns: time_s, fidelity, trace, min_eig, leakage,
// parity_expectation. Fidelity values come from the caller (against
// whichever reference applies); when absent each sample is compared to the
// first one. Parity expectation is NaN unless a parity diagonal is given.
struct TrajectoryCsvOptions {
    const std::vector<double>* fidelity = nullptr;
    const Eigen::VectorXd* parity_diagonal = nullptr;
};
void emit_trajectory_csv(const Trajectory& traj, const std::string& path,
                         const TrajectoryCsvOptions& opts = {});

} // namespace qrsim::dyn
