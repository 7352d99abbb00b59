#include "qrsim/dynamics.hpp"

#include "qrsim/constants.hpp"
#include "qrsim/kernels.hpp"
#include "qrsim/linalg.hpp"
#include "qrsim/spin1.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qrsim::dyn {

namespace {

constexpr cxd kMinusI{0.0, -1.0};

Eigen::MatrixXcd pad_to(const Eigen::Matrix3cd& op, int n_kept) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n_kept, n_kept);
    out.topLeftCorner(3, 3) = op;
    return out;
}

Eigen::MatrixXcd embed_site(const Eigen::MatrixXcd& op, int site, const ChainBasis& basis) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = 0; s < basis.n_sites; ++s) {
        const Eigen::MatrixXcd factor =
            (s == site) ? op : Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(basis.n_kept, basis.n_kept));
        out = linalg::kron(out, factor);
    }
    return out;
}

} // namespace

int ChainBasis::site_stride(int site) const {
    int stride = 1;
    for (int s = site + 1; s < n_sites; ++s) stride *= n_kept;
    return stride;
}

int ChainBasis::site_level(int index, int site) const {
    return (index / site_stride(site)) % n_kept;
}

ChainState ChainState::pure(ChainBasis basis, Eigen::VectorXcd psi, double time) {
    if (psi.size() != basis.dim())
        throw std::invalid_argument("ChainState: state size does not match basis");
    ChainState s;
    s.basis = basis;
    s.psi = std::move(psi);
    s.time = time;
    const double norm = s.psi.norm();
    if (std::abs(norm - 1.0) > 1e-8)
        throw std::invalid_argument("ChainState: pure state not normalized");
    return s;
}

ChainState ChainState::density(ChainBasis basis, Eigen::MatrixXcd rho, double time) {
    if (rho.rows() != basis.dim() || rho.cols() != basis.dim())
        throw std::invalid_argument("ChainState: density size does not match basis");
    ChainState s;
    s.basis = basis;
    s.rho = std::move(rho);
    s.is_density = true;
    s.time = time;
    if (std::abs(s.rho.trace().real() - 1.0) > 1e-8 || std::abs(s.rho.trace().imag()) > 1e-8)
        throw std::invalid_argument("ChainState: density trace must be 1");
    return s;
}

ChainState ChainState::to_density() const {
    if (is_density) return *this;
    ChainState s;
    s.basis = basis;
    s.is_density = true;
    s.time = time;
    s.rho = psi * psi.adjoint();
    return s;
}

void ChainState::check_valid() const {
    if (!is_density) {
        if (std::abs(psi.norm() - 1.0) > 1e-8)
            throw std::runtime_error("ChainState: norm drifted beyond 1e-8");
        return;
    }
    if ((rho - rho.adjoint()).norm() > 1e-10 * std::max(1.0, rho.norm()))
        throw std::runtime_error("ChainState: density not Hermitian to 1e-10");
    if (std::abs(rho.trace().real() - 1.0) > 1e-8)
        throw std::runtime_error("ChainState: trace drifted beyond 1e-8");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8)
        throw std::runtime_error("ChainState: negative eigenvalue beyond -1e-8");
}

double leakage(const ChainState& state) {
    if (state.basis.n_kept <= 3) return 0.0;
    const int dim = state.basis.dim();
    double total = 0.0;
    for (int a = 0; a < dim; ++a) {
        bool outside = false;
        for (int s = 0; s < state.basis.n_sites && !outside; ++s)
            outside = state.basis.site_level(a, s) >= 3;
        if (!outside) continue;
        total += state.is_density ? state.rho(a, a).real() : std::norm(state.psi(a));
    }
    return total;
}

double thermal_occupation(double omega, double temperature) {
    if (!(omega > 0.0)) throw std::invalid_argument("thermal_occupation: omega must be > 0");
    if (temperature < 0.0) throw std::invalid_argument("thermal_occupation: T must be >= 0");
    if (temperature == 0.0) return 0.0;
    const double x = constants::hbar * omega / (constants::k_boltzmann * temperature);
    if (x > 700.0) return 0.0;
    return 1.0 / std::expm1(x);
}

double DissipatorSet::omitted_rate(int n_levels) const {
    double sum = 0.0;
    for (const auto& c : channels)
        if (c.upper >= n_levels) sum += c.gamma;
    return sum;
}

DissipatorSet build_dissipators(const std::vector<const rabi::DressedSite*>& sites,
                                double kappa_c, double kappa_x, double kappa_z,
                                double temperature) {
    if (kappa_c < 0.0 || kappa_x < 0.0 || kappa_z < 0.0)
        throw std::invalid_argument("build_dissipators: rates must be >= 0");
    if (temperature < 0.0)
        throw std::invalid_argument("build_dissipators: T must be >= 0");
    DissipatorSet set;
    set.temperature = temperature;
    if (kappa_c == 0.0 && kappa_x == 0.0 && kappa_z == 0.0) return set;

    for (std::size_t s = 0; s < sites.size(); ++s) {
        const auto& site = *sites[s];
        const int nk = site.n_kept();
        for (int k = 1; k < nk; ++k) {
            for (int j = 0; j < k; ++j) {
                const double omega = site.gap(k, j);
                if (!(omega > 0.0))
                    throw std::runtime_error("build_dissipators: non-positive gap; "
                                             "spectrum not sorted");
                const double g_cav = omega * kappa_c / site.params.omega_r *
                                     site.chi(k, j) * site.chi(k, j);
                const double g_dec = omega * kappa_x / site.params.omega_q *
                                     site.sigma_x(k, j) * site.sigma_x(k, j);
                const double g_deph = omega * kappa_z / site.params.omega_q *
                                      site.sigma_z(k, j) * site.sigma_z(k, j);
                const double gamma = g_cav + g_dec + g_deph;
                if (gamma <= 0.0) continue;
                const double nbar = thermal_occupation(omega, temperature);
                Channel ch;
                ch.site = static_cast<int>(s);
                ch.upper = k;
                ch.lower = j;
                ch.gamma = gamma;
                ch.omega = omega;
                ch.rate_down = gamma * (1.0 + nbar);
                ch.rate_up = gamma * nbar;
                set.channels.push_back(ch);
            }
        }
    }
    return set;
}

// ---------------------------------------------------------------- model --

FluxDrivenModel::FluxDrivenModel(const circuit::ChainConfig& chain,
                                 std::vector<circuit::FluxSignal> squid_signals,
                                 std::vector<std::optional<pulse::DriveSignal>> site_drives)
    : signals_(std::move(squid_signals)), drives_(std::move(site_drives)) {
    chain.validate();
    const int ns = chain.n_sites();
    const int nk = chain.n_kept();
    if (static_cast<int>(signals_.size()) != ns - 1)
        throw std::invalid_argument("FluxDrivenModel: one flux signal per SQUID required");
    if (!drives_.empty() && static_cast<int>(drives_.size()) != ns)
        throw std::invalid_argument("FluxDrivenModel: drive list must match site count");
    dim_ = chain.dim();

    // Frame energies: sums of per-site dressed energies.
    energies_.resize(dim_);
    ChainBasis basis{ns, nk};
    for (int a = 0; a < dim_; ++a) {
        double e = 0.0;
        for (int s = 0; s < ns; ++s) e += chain.sites[s]->epsilon(basis.site_level(a, s));
        energies_(a) = e;
    }

    for (int s = 0; s < ns; ++s) {
        const auto& site = *chain.sites[s];
        const double p_sum = site.p_left + site.p_right;
        Eigen::MatrixXd z_off = site.z;
        z_off.diagonal().setZero();
        if (p_sum != 0.0 && z_off.cwiseAbs().maxCoeff() > 0.0)
            terms_.push_back({circuit::embed_site_operator(z_off, s, ns, nk), 0, 0, p_sum});
        // Flux-modulated single-site squeezing, one term per adjacent SQUID.
        if (chain.q != 0.0) {
            const Eigen::MatrixXd z_site = circuit::embed_site_operator(site.z, s, ns, nk);
            if (s > 0) terms_.push_back({z_site, 1, s - 1, chain.q});
            if (s + 1 < ns) terms_.push_back({z_site, 1, s, chain.q});
        }
        if (!drives_.empty() && drives_[s])
            terms_.push_back({circuit::embed_site_operator(site.chi, s, ns, nk), 2, s, 1.0});
    }
    for (int s = 0; s + 1 < ns; ++s) {
        const Eigen::MatrixXd cross =
            circuit::embed_site_operator(chain.sites[s]->chi, s, ns, nk) *
            circuit::embed_site_operator(chain.sites[s + 1]->chi, s + 1, ns, nk);
        if (chain.p != 0.0) terms_.push_back({cross, 0, 0, -2.0 * chain.p});
        if (chain.q != 0.0) terms_.push_back({cross, 1, s, -2.0 * chain.q});
    }
}

double FluxDrivenModel::coeff(const Term& term, double t) const {
    switch (term.kind) {
        case 0: return term.scale;
        case 1: return term.scale * signals_[term.index].eval(t);
        case 2: return term.scale * drives_[term.index]->eval(t);
    }
    return 0.0;
}

void FluxDrivenModel::assemble_real(double t, double* out) const {
    const std::size_t n = static_cast<std::size_t>(dim_) * dim_;
    std::fill(out, out + n, 0.0);
    for (const auto& term : terms_) {
        const double c = coeff(term, t);
        if (c != 0.0) kernels::axpy_real(c, term.op.data(), out, n);
    }
}

double FluxDrivenModel::max_omega() const {
    double gap = energies_.maxCoeff() - energies_.minCoeff();
    double nu = 0.0;
    for (const auto& sig : signals_) nu = std::max(nu, sig.max_omega());
    for (const auto& d : drives_)
        if (d) nu = std::max(nu, d->max_omega());
    return gap + nu;
}

double FluxDrivenModel::peak_flux() const {
    double v = 0.0;
    for (const auto& sig : signals_) v = std::max(v, sig.peak_estimate());
    return v;
}

FluxDrivenModel::Workspace FluxDrivenModel::make_workspace() const {
    Workspace ws;
    ws.h_real.resize(static_cast<std::size_t>(dim_) * dim_);
    ws.phase.resize(dim_);
    ws.scratch.resize(dim_);
    return ws;
}

void FluxDrivenModel::apply(double t, const cxd* in, cxd* out, Workspace& ws) const {
    assemble_real(t, ws.h_real.data());
    for (int a = 0; a < dim_; ++a) {
        const double th = energies_(a) * t;
        ws.phase[a] = cxd{std::cos(th), std::sin(th)};
    }
    kernels::vmul_conj(ws.phase.data(), in, ws.scratch.data(), dim_);
    kernels::gemv_real(ws.h_real.data(), dim_, dim_, ws.scratch.data(), out);
    kernels::vmul(ws.phase.data(), out, out, dim_);
    kernels::scal(kMinusI, out, dim_);
}

Eigen::MatrixXcd FluxDrivenModel::hamiltonian(double t) const {
    std::vector<double> buf(static_cast<std::size_t>(dim_) * dim_);
    assemble_real(t, buf.data());
    Eigen::MatrixXcd h(dim_, dim_);
    for (int j = 0; j < dim_; ++j)
        for (int i = 0; i < dim_; ++i) h(i, j) = buf[j * dim_ + i];
    std::vector<cxd> phase(dim_);
    for (int a = 0; a < dim_; ++a) {
        const double th = energies_(a) * t;
        phase[a] = cxd{std::cos(th), std::sin(th)};
    }
    kernels::phase_frame(h.data(), phase.data(), dim_);
    return h;
}

// ------------------------------------------------------------ integrator --

namespace {

using RhsFn = std::function<void(double, const cxd*, cxd*)>;

struct RkWorkspace {
    std::vector<cxd> k1, k2, k3, k4, tmp, y_big, y_half, err;
    explicit RkWorkspace(std::size_t n)
        : k1(n), k2(n), k3(n), k4(n), tmp(n), y_big(n), y_half(n), err(n) {}
};

// One classic RK4 step from (t, y) to y_out, k1 supplied.
void rk4_step(const RhsFn& rhs, double t, double h, const std::vector<cxd>& y,
              const std::vector<cxd>& k1, std::vector<cxd>& y_out, RkWorkspace& ws) {
    const std::size_t n = y.size();
    auto& k2 = ws.k2;
    auto& k3 = ws.k3;
    auto& k4 = ws.k4;
    auto& tmp = ws.tmp;

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(t + 0.5 * h, tmp.data(), k2.data());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(t + 0.5 * h, tmp.data(), k3.data());
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(t + h, tmp.data(), k4.data());
    for (std::size_t i = 0; i < n; ++i)
        y_out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

struct AdaptiveOptions {
    double abs_tol;
    double rel_tol;
    double max_step;
    double t_span;
};

// Step-doubling adaptive RK4 with local extrapolation. The acceptance
// threshold is scaled by h/t_span so the run-total error tracks the budget.
// on_accept may massage y (e.g. hermitization); on_stop fires at each
// requested sample time.
void rk4_adaptive(const RhsFn& rhs, std::vector<cxd>& y, double t_begin,
                  const std::vector<double>& stops, const AdaptiveOptions& opts,
                  const std::function<void(double, std::vector<cxd>&)>& on_accept,
                  const std::function<void(double, const std::vector<cxd>&)>& on_stop,
                  long& evals) {
    const std::size_t n = y.size();
    RkWorkspace ws(n);
    std::vector<cxd> k1_half(n);

    double t = t_begin;
    double h = opts.max_step;
    const double h_min = std::max(opts.t_span, 1e-300) * 1e-15;

    for (double stop : stops) {
        if (stop < t - 1e-30)
            throw std::invalid_argument("rk4_adaptive: sample times must ascend");
        while (stop - t > h_min) {
            bool clipped = false;
            double h_try = h;
            if (t + h_try >= stop) {
                h_try = stop - t;
                clipped = true;
            }
            if (h_try < h_min)
                throw std::runtime_error("rk4_adaptive: step-size underflow");

            rhs(t, y.data(), ws.k1.data());
            evals += 1;
            // Full step and two half steps sharing k1.
            rk4_step(rhs, t, h_try, y, ws.k1, ws.y_big, ws);
            evals += 3;
            rk4_step(rhs, t, 0.5 * h_try, y, ws.k1, ws.y_half, ws);
            evals += 3;
            rhs(t + 0.5 * h_try, ws.y_half.data(), k1_half.data());
            evals += 1;
            rk4_step(rhs, t + 0.5 * h_try, 0.5 * h_try, ws.y_half, k1_half, ws.y_half, ws);
            evals += 3;

            for (std::size_t i = 0; i < n; ++i) ws.err[i] = ws.y_half[i] - ws.y_big[i];
            const double err = std::sqrt(kernels::norm_sq(ws.err.data(), n)) / 15.0;
            const double ynorm = std::sqrt(kernels::norm_sq(y.data(), n));
            // Short clipped steps otherwise drive the per-unit-time budget
            // below rounding noise and the controller would reject forever.
            const double tol =
                std::max((opts.abs_tol + opts.rel_tol * ynorm) * (h_try / opts.t_span),
                         5e-15 * std::max(ynorm, 1e-300));

            if (err <= tol || h_try <= h_min * 2.0) {
                for (std::size_t i = 0; i < n; ++i)
                    y[i] = ws.y_half[i] + ws.err[i] / 15.0;
                t = clipped ? stop : t + h_try;
                on_accept(t, y);
                double grow = 4.0;
                if (err > 0.0)
                    grow = std::clamp(0.9 * std::pow(tol / err, 0.25), 0.2, 4.0);
                if (!clipped) h = std::min(h_try * grow, opts.max_step);
                else h = std::min(h * grow, opts.max_step);
            } else {
                const double shrink =
                    std::clamp(0.9 * std::pow(tol / err, 0.25), 0.1, 0.9);
                h = h_try * shrink;
            }
        }
        on_stop(stop, y);
    }
}

double default_max_step(double omega_max) {
    if (!(omega_max > 0.0)) return 1e-9;
    return (constants::two_pi / omega_max) / 20.0;
}

} // namespace

Trajectory propagate_unitary(const FluxDrivenModel& model, const ChainState& psi0,
                             const std::vector<double>& sample_times,
                             const PropagationOptions& opts) {
    if (psi0.is_density)
        throw std::invalid_argument("propagate_unitary: pure state required");
    if (psi0.psi.size() != model.dim())
        throw std::invalid_argument("propagate_unitary: dimension mismatch");

    Trajectory traj;
    std::vector<cxd> y(psi0.psi.data(), psi0.psi.data() + psi0.psi.size());
    auto ws = model.make_workspace();
    const std::size_t n = y.size();

    const double t_span = sample_times.empty()
                              ? 1.0
                              : std::max(sample_times.back() - psi0.time, 1e-30);
    // A caller-supplied step cap may only tighten the tone-resolving bound.
    const double cap = default_max_step(model.max_omega());
    AdaptiveOptions aopts{opts.abs_tol, opts.rel_tol,
                          opts.max_step > 0.0 ? std::min(opts.max_step, cap) : cap,
                          t_span};

    if (opts.method == Method::magnus2) {
        // Fixed-step midpoint-exponential stepping; exactly unitary.
        double h = opts.fixed_step > 0.0 ? opts.fixed_step : aopts.max_step;
        double t = psi0.time;
        Eigen::VectorXcd v = psi0.psi;
        for (double stop : sample_times) {
            while (t < stop - 1e-30) {
                const double step = std::min(h, stop - t);
                Eigen::MatrixXcd u =
                    linalg::expm_hermitian(model.hamiltonian(t + 0.5 * step),
                                           cxd{0.0, -step});
                Eigen::VectorXcd next(v.size());
                kernels::gemv(u.data(), n, n, v.data(), next.data());
                v = std::move(next);
                t += step;
                traj.rhs_evaluations += 1;
            }
            traj.times.push_back(stop);
            ChainState s = psi0;
            s.psi = v;
            s.time = stop;
            traj.states.push_back(std::move(s));
            traj.max_norm_drift =
                std::max(traj.max_norm_drift, std::abs(v.norm() - 1.0));
        }
        return traj;
    }

    RhsFn rhs = [&model, &ws](double t, const cxd* in, cxd* out) {
        model.apply(t, in, out, ws);
    };
    const double drift_budget = 10.0 * (opts.abs_tol + opts.rel_tol);
    rk4_adaptive(
        rhs, y, psi0.time, sample_times, aopts,
        [&](double, std::vector<cxd>& state) {
            const double drift =
                std::abs(std::sqrt(kernels::norm_sq(state.data(), n)) - 1.0);
            traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
        },
        [&](double t, const std::vector<cxd>& state) {
            ChainState s = psi0;
            s.psi = Eigen::Map<const Eigen::VectorXcd>(state.data(), n);
            s.time = t;
            traj.times.push_back(t);
            traj.states.push_back(std::move(s));
        },
        traj.rhs_evaluations);

    if (traj.max_norm_drift > drift_budget) {
        std::ostringstream msg;
        msg << "propagate_unitary: norm drift " << traj.max_norm_drift
            << " exceeded budget " << drift_budget;
        throw std::runtime_error(msg.str());
    }
    return traj;
}

Trajectory propagate_unitary_const(const Eigen::MatrixXcd& h, const ChainState& psi0,
                                   const std::vector<double>& sample_times,
                                   const PropagationOptions& opts) {
    if (psi0.is_density)
        throw std::invalid_argument("propagate_unitary_const: pure state required");
    const std::size_t n = psi0.psi.size();
    if (h.rows() != static_cast<Eigen::Index>(n))
        throw std::invalid_argument("propagate_unitary_const: dimension mismatch");

    Trajectory traj;
    std::vector<cxd> y(psi0.psi.data(), psi0.psi.data() + n);
    const double t_span = sample_times.empty()
                              ? 1.0
                              : std::max(sample_times.back() - psi0.time, 1e-30);
    const double hnorm = h.norm() + 1e-300;
    AdaptiveOptions aopts{opts.abs_tol, opts.rel_tol,
                          opts.max_step > 0.0 ? opts.max_step : 0.3 / hnorm, t_span};

    RhsFn rhs = [&h, n](double, const cxd* in, cxd* out) {
        kernels::gemv(h.data(), n, n, in, out);
        kernels::scal(kMinusI, out, n);
    };
    const double drift_budget = 10.0 * (opts.abs_tol + opts.rel_tol);
    rk4_adaptive(
        rhs, y, psi0.time, sample_times, aopts,
        [&](double, std::vector<cxd>& state) {
            const double drift =
                std::abs(std::sqrt(kernels::norm_sq(state.data(), n)) - 1.0);
            traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
        },
        [&](double t, const std::vector<cxd>& state) {
            ChainState s = psi0;
            s.psi = Eigen::Map<const Eigen::VectorXcd>(state.data(), n);
            s.time = t;
            traj.times.push_back(t);
            traj.states.push_back(std::move(s));
        },
        traj.rhs_evaluations);
    if (traj.max_norm_drift > drift_budget)
        throw std::runtime_error("propagate_unitary_const: norm drift exceeded budget");
    return traj;
}

// -------------------------------------------------------------- lindblad --

namespace {

struct CompiledChannels {
    struct Jump {
        double rate = 0.0;
        int shift = 0;     // index shift from the source to the target manifold
        int manifold = 0;  // index into manifolds: source-level basis indices
    };
    std::vector<Jump> jumps;
    Eigen::VectorXd decay;  // w_a; anticommutator folded into one vector
    std::vector<std::vector<int>> manifolds;  // per (site, level)
};

CompiledChannels compile_channels(const DissipatorSet& diss, const ChainBasis& basis) {
    CompiledChannels cc;
    const int dim = basis.dim();
    cc.decay = Eigen::VectorXd::Zero(dim);
    // Manifolds indexed site*n_kept + level, each of size dim/n_kept.
    cc.manifolds.assign(static_cast<std::size_t>(basis.n_sites) * basis.n_kept, {});
    for (int s = 0; s < basis.n_sites; ++s)
        for (int a = 0; a < dim; ++a)
            cc.manifolds[s * basis.n_kept + basis.site_level(a, s)].push_back(a);
    for (const auto& ch : diss.channels) {
        if (ch.upper >= basis.n_kept) continue;  // outside this truncation
        const int stride = basis.site_stride(ch.site);
        if (ch.rate_down > 0.0) {
            cc.jumps.push_back({ch.rate_down, (ch.lower - ch.upper) * stride,
                                ch.site * basis.n_kept + ch.upper});
            for (int a : cc.manifolds[ch.site * basis.n_kept + ch.upper])
                cc.decay(a) += 0.5 * ch.rate_down;
        }
        if (ch.rate_up > 0.0) {
            cc.jumps.push_back({ch.rate_up, (ch.upper - ch.lower) * stride,
                                ch.site * basis.n_kept + ch.lower});
            for (int a : cc.manifolds[ch.site * basis.n_kept + ch.lower])
                cc.decay(a) += 0.5 * ch.rate_up;
        }
    }
    return cc;
}

// out = -i[H, rho] + dissipators
void lindblad_rhs(const Eigen::MatrixXcd& h, const CompiledChannels& cc, int dim,
                  const cxd* rho, cxd* out) {
    const std::size_t n = static_cast<std::size_t>(dim);
    // -i H rho
    kernels::gemm(h.data(), rho, out, n, n, n);
    kernels::scal(kMinusI, out, n * n);
    // +i rho H: out += i * rho*H
    std::vector<cxd> tmp(n * n);
    kernels::gemm(rho, h.data(), tmp.data(), n, n, n);
    kernels::axpy(cxd{0.0, 1.0}, tmp.data(), out, n * n);
    // jump gains
    for (const auto& jump : cc.jumps) {
        const auto& from = cc.manifolds[jump.manifold];
        for (int b : from) {
            const cxd* col = rho + static_cast<std::size_t>(b) * dim;
            cxd* ocol = out + static_cast<std::size_t>(b + jump.shift) * dim;
            for (int a : from) ocol[a + jump.shift] += jump.rate * col[a];
        }
    }
    // anticommutator decay
    for (int b = 0; b < dim; ++b) {
        const double wb = cc.decay(b);
        const cxd* col = rho + static_cast<std::size_t>(b) * dim;
        cxd* ocol = out + static_cast<std::size_t>(b) * dim;
        for (int a = 0; a < dim; ++a) ocol[a] -= (cc.decay(a) + wb) * col[a];
    }
}

void hermitize_flat(std::vector<cxd>& y, int dim) {
    for (int j = 0; j < dim; ++j) {
        for (int i = 0; i <= j; ++i) {
            const cxd a = y[j * dim + i];
            const cxd b = y[i * dim + j];
            const cxd m = 0.5 * (a + std::conj(b));
            y[j * dim + i] = m;
            y[i * dim + j] = std::conj(m);
        }
    }
}

Trajectory lindblad_run(const std::function<const Eigen::MatrixXcd&(double)>& ham_at,
                        const DissipatorSet& diss, const ChainState& rho0,
                        const std::vector<double>& sample_times,
                        const PropagationOptions& opts, double omega_max) {
    ChainState start = rho0.is_density ? rho0 : rho0.to_density();
    const int dim = start.basis.dim();
    CompiledChannels cc = compile_channels(diss, start.basis);

    Trajectory traj;
    traj.min_eigenvalue = 1.0;
    std::vector<cxd> y(start.rho.data(), start.rho.data() + static_cast<std::size_t>(dim) * dim);
    const double t_span = sample_times.empty()
                              ? 1.0
                              : std::max(sample_times.back() - start.time, 1e-30);
    const double cap = default_max_step(omega_max);
    AdaptiveOptions aopts{opts.abs_tol, opts.rel_tol,
                          opts.max_step > 0.0 ? std::min(opts.max_step, cap) : cap,
                          t_span};

    RhsFn rhs = [&](double t, const cxd* in, cxd* out) {
        lindblad_rhs(ham_at(t), cc, dim, in, out);
    };
    rk4_adaptive(
        rhs, y, start.time, sample_times, aopts,
        [&](double, std::vector<cxd>& state) { hermitize_flat(state, dim); },
        [&](double t, const std::vector<cxd>& state) {
            ChainState s = start;
            s.rho = Eigen::Map<const Eigen::MatrixXcd>(state.data(), dim, dim);
            s.time = t;
            const double tr = s.rho.trace().real();
            traj.max_trace_drift = std::max(traj.max_trace_drift, std::abs(tr - 1.0));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.rho, Eigen::EigenvaluesOnly);
            const double mineig = es.eigenvalues().minCoeff();
            traj.min_eigenvalue = std::min(traj.min_eigenvalue, mineig);
            if (mineig < -1e-6)
                throw std::runtime_error(
                    "propagate_lindblad: positivity violated beyond -1e-6; "
                    "tighten the integration tolerances");
            traj.times.push_back(t);
            traj.states.push_back(std::move(s));
        },
        traj.rhs_evaluations);

    if (traj.max_trace_drift > 1e-8)
        throw std::runtime_error("propagate_lindblad: trace drift exceeded 1e-8");
    return traj;
}

} // namespace

Trajectory propagate_lindblad(const FluxDrivenModel& model, const DissipatorSet& diss,
                              const ChainState& rho0,
                              const std::vector<double>& sample_times,
                              const PropagationOptions& opts) {
    if (opts.method == Method::magnus2)
        throw std::invalid_argument("propagate_lindblad: magnus2 not supported here");
    Eigen::MatrixXcd h_buf;
    auto ham_at = [&](double t) -> const Eigen::MatrixXcd& {
        h_buf = model.hamiltonian(t);
        return h_buf;
    };
    return lindblad_run(ham_at, diss, rho0, sample_times, opts, model.max_omega());
}

Trajectory propagate_lindblad_const(const Eigen::MatrixXcd& h, const DissipatorSet& diss,
                                    const ChainState& rho0,
                                    const std::vector<double>& sample_times,
                                    const PropagationOptions& opts) {
    if (opts.method == Method::magnus2)
        throw std::invalid_argument("propagate_lindblad: magnus2 not supported here");
    auto ham_at = [&h](double) -> const Eigen::MatrixXcd& { return h; };
    double omega_max = h.norm() > 0 ? h.norm() : 1.0;
    for (const auto& ch : diss.channels) omega_max = std::max(omega_max, 10.0 * ch.gamma);
    return lindblad_run(ham_at, diss, rho0, sample_times, opts, omega_max);
}

// ------------------------------------------------------------- effective --

Eigen::MatrixXcd lindblad_superoperator(const Eigen::MatrixXcd& h,
                                        const DissipatorSet& diss,
                                        const ChainBasis& basis) {
    const int dim = basis.dim();
    if (h.rows() != dim) throw std::invalid_argument("lindblad_superoperator: dim mismatch");
    const Eigen::MatrixXcd ident = Eigen::MatrixXcd::Identity(dim, dim);
    Eigen::MatrixXcd sup = cxd{0.0, -1.0} *
                           (linalg::kron(ident, h) - linalg::kron(h.transpose(), ident));
    for (const auto& ch : diss.channels) {
        if (ch.upper >= basis.n_kept) continue;
        Eigen::MatrixXcd down = Eigen::MatrixXcd::Zero(basis.n_kept, basis.n_kept);
        down(ch.lower, ch.upper) = 1.0;
        for (int dir = 0; dir < 2; ++dir) {
            const double rate = dir == 0 ? ch.rate_down : ch.rate_up;
            if (rate <= 0.0) continue;
            const Eigen::MatrixXcd op =
                embed_site(dir == 0 ? down : Eigen::MatrixXcd(down.adjoint()), ch.site, basis);
            const Eigen::MatrixXcd opdop = op.adjoint() * op;
            sup += rate * (linalg::kron(op.conjugate(), op) -
                           0.5 * linalg::kron(ident, opdop) -
                           0.5 * linalg::kron(opdop.transpose(), ident));
        }
    }
    return sup;
}

void emit_trajectory_csv(const Trajectory& traj, const std::string& path,
                         const TrajectoryCsvOptions& opts) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("emit_trajectory_csv: cannot write " + path);
    out << "time_s,fidelity,trace,min_eig,leakage,parity_expectation\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const ChainState& s = traj.states[k];
        double fidelity;
        if (opts.fidelity) {
            fidelity = opts.fidelity->at(k);
        } else if (s.is_density) {
            fidelity = spin1::uhlmann_fidelity(traj.states.front().rho, s.rho);
        } else {
            fidelity = std::abs(traj.states.front().psi.dot(s.psi));
        }
        double trace, min_eig, parity;
        if (s.is_density) {
            trace = s.rho.trace().real();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.rho,
                                                               Eigen::EigenvaluesOnly);
            min_eig = es.eigenvalues().minCoeff();
        } else {
            trace = s.psi.squaredNorm();
            min_eig = 0.0;
        }
        if (opts.parity_diagonal) {
            const Eigen::VectorXd& pd = *opts.parity_diagonal;
            parity = 0.0;
            if (s.is_density)
                for (int a = 0; a < s.rho.rows(); ++a)
                    parity += pd(a) * s.rho(a, a).real();
            else
                for (int a = 0; a < s.psi.size(); ++a)
                    parity += pd(a) * std::norm(s.psi(a));
        } else {
            parity = std::numeric_limits<double>::quiet_NaN();
        }
        char buf[220];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      traj.times[k], fidelity, trace, min_eig, leakage(s), parity);
        out << buf;
    }
}

bool EffectiveEvolver::Key::operator<(const Key& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (strength != o.strength) return strength < o.strength;
    if (duration != o.duration) return duration < o.duration;
    return field < o.field;
}

EffectiveEvolver::EffectiveEvolver(ChainBasis basis, const DissipatorSet* dissipators,
                                   int superop_dim_limit)
    : basis_(basis), diss_(dissipators), superop_limit_(superop_dim_limit) {
    const auto& o = spin1::ops();
    const Eigen::MatrixXcd sx = pad_to(o.sx, basis.n_kept);
    const Eigen::MatrixXcd sy = pad_to(o.sy, basis.n_kept);
    const int ns = basis.n_sites;
    const int dim = basis.dim();
    sx_sum_ = Eigen::MatrixXcd::Zero(dim, dim);
    sy_sum_ = Eigen::MatrixXcd::Zero(dim, dim);
    xx_bond_ = Eigen::MatrixXcd::Zero(dim, dim);
    xy_bond_ = Eigen::MatrixXcd::Zero(dim, dim);
    for (int s = 0; s < ns; ++s) {
        sx_sum_ += embed_site(sx, s, basis);
        sy_sum_ += embed_site(sy, s, basis);
    }
    for (int s = 0; s + 1 < ns; ++s) {
        const Eigen::MatrixXcd sxsx = embed_site(sx, s, basis) * embed_site(sx, s + 1, basis);
        const Eigen::MatrixXcd sysy = embed_site(sy, s, basis) * embed_site(sy, s + 1, basis);
        xx_bond_ += sxsx;
        xy_bond_ += sxsx + sysy;
    }
}

Eigen::MatrixXcd EffectiveEvolver::segment_hamiltonian(const pulse::Segment& seg) const {
    using pulse::SegmentKind;
    switch (seg.kind) {
        case SegmentKind::xy: return seg.strength * xy_bond_;
        case SegmentKind::xx: return seg.strength * xx_bond_;
        case SegmentKind::rot_x: return seg.strength * sx_sum_;
        case SegmentKind::rot_x_dag: return -seg.strength * sx_sum_;
        case SegmentKind::rot_y: return seg.strength * sy_sum_;
        case SegmentKind::rot_y_dag: return -seg.strength * sy_sum_;
        case SegmentKind::ising:
            return seg.strength * xx_bond_ + seg.field_b * sx_sum_;
        case SegmentKind::idle:
            return Eigen::MatrixXcd::Zero(basis_.dim(), basis_.dim());
    }
    throw std::invalid_argument("segment_hamiltonian: unknown kind");
}

const Eigen::MatrixXcd& EffectiveEvolver::segment_unitary(const pulse::Segment& seg) {
    Key key{static_cast<int>(seg.kind), seg.strength, seg.duration, seg.field_b};
    auto it = unitary_cache_.find(key);
    if (it == unitary_cache_.end()) {
        it = unitary_cache_
                 .emplace(key, linalg::unitary_of(segment_hamiltonian(seg), seg.duration))
                 .first;
    }
    return it->second;
}

const Eigen::MatrixXcd& EffectiveEvolver::segment_superop(const pulse::Segment& seg) {
    Key key{static_cast<int>(seg.kind), seg.strength, seg.duration, seg.field_b};
    auto it = superop_cache_.find(key);
    if (it == superop_cache_.end()) {
        Eigen::MatrixXcd sup =
            lindblad_superoperator(segment_hamiltonian(seg), *diss_, basis_);
        sup *= seg.duration;
        it = superop_cache_.emplace(key, linalg::expm(sup)).first;
    }
    return it->second;
}

bool EffectiveEvolver::use_superop(const ChainState& state) const {
    return state.is_density && diss_ && !diss_->empty() &&
           basis_.dim() * basis_.dim() <= superop_limit_;
}

void EffectiveEvolver::warm(const pulse::GateSchedule& schedule, bool density_mode) {
    const bool dissipative = diss_ && !diss_->empty();
    for (const auto& seg : schedule.segments) {
        if (density_mode && dissipative) {
            if (basis_.dim() * basis_.dim() <= superop_limit_) segment_superop(seg);
        } else {
            segment_unitary(seg);
        }
    }
}

void EffectiveEvolver::apply_segment(const pulse::Segment& seg, ChainState& state) {
    const int dim = basis_.dim();
    if (!state.is_density) {
        const Eigen::MatrixXcd& u = segment_unitary(seg);
        Eigen::VectorXcd next(dim);
        kernels::gemv(u.data(), dim, dim, state.psi.data(), next.data());
        state.psi = std::move(next);
    } else if (!diss_ || diss_->empty()) {
        const Eigen::MatrixXcd& u = segment_unitary(seg);
        state.rho = linalg::mul(linalg::mul(u, state.rho), Eigen::MatrixXcd(u.adjoint()));
    } else if (use_superop(state)) {
        const Eigen::MatrixXcd& e = segment_superop(seg);
        Eigen::MatrixXcd next(dim, dim);
        kernels::gemv(e.data(), static_cast<std::size_t>(dim) * dim,
                      static_cast<std::size_t>(dim) * dim, state.rho.data(), next.data());
        state.rho = std::move(next);
    } else {
        PropagationOptions opts;
        opts.abs_tol = 1e-9;
        opts.rel_tol = 1e-9;
        Trajectory part = propagate_lindblad_const(
            segment_hamiltonian(seg), *diss_, state, {state.time + seg.duration}, opts);
        state.rho = part.states.back().rho;
    }
    state.time += seg.duration;
    if (state.is_density) {
        Eigen::MatrixXcd adj = state.rho.adjoint();
        state.rho = 0.5 * (state.rho + adj);
    }
}

std::vector<ChainState> EffectiveEvolver::run(const pulse::GateSchedule& schedule,
                                              const ChainState& initial,
                                              const std::vector<int>& record_after) {
    if (initial.basis.dim() != basis_.dim())
        throw std::invalid_argument("EffectiveEvolver: state basis mismatch");
    ChainState state = initial;
    if (diss_ && !diss_->empty() && !state.is_density) state = state.to_density();

    std::vector<ChainState> out;
    std::size_t next_record = 0;
    for (int i = 0; i < static_cast<int>(schedule.segments.size()); ++i) {
        try {
            apply_segment(schedule.segments[i], state);
        } catch (const std::exception& e) {
            throw std::runtime_error(
                "segment " + std::to_string(i) + " (" +
                pulse::segment_kind_name(schedule.segments[i].kind) + "): " + e.what());
        }
        if (next_record < record_after.size() && record_after[next_record] == i) {
            out.push_back(state);
            ++next_record;
        }
    }
    if (next_record != record_after.size())
        throw std::invalid_argument("EffectiveEvolver: record index out of range");
    return out;
}

} // namespace qrsim::dyn
