// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier runs reuse the reference configuration; tolerances are
// pinned in code next to each check.

#include "qrsim/circuit.hpp"
#include "qrsim/constants.hpp"
#include "qrsim/dynamics.hpp"
#include "qrsim/experiment.hpp"
#include "qrsim/linalg.hpp"
#include "qrsim/pulse.hpp"
#include "qrsim/rabi.hpp"
#include "qrsim/spin1.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

using namespace qrsim;
using constants::ghz;

namespace {

struct Harness {
    int failures = 0;

    void report(int number, bool pass, const std::string& name,
                const std::string& detail) {
        std::printf("CRITERION %d %s  %s\n    %s\n", number, pass ? "PASS" : "FAIL",
                    name.c_str(), detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
};

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

// --------------------------------------------------------------------------
// 1. Parity and selection rules across the coupling range.
void criterion_1(Harness& h) {
    bool pass = true;
    std::string detail;
    for (double go : {0.0, 0.3, 0.6, 0.9}) {
        rabi::QrsParams p;
        p.omega_r = ghz(10.0);
        p.omega_q = ghz(9.0);
        p.g = go * p.omega_r;
        p.n_fock = 60;
        const Eigen::MatrixXd ham = rabi::build_rabi_hamiltonian(p);
        const Eigen::VectorXd pd = rabi::parity_diagonal(p.n_fock);
        const double comm =
            (ham * pd.asDiagonal() - pd.asDiagonal() * ham).norm() / ham.norm();
        if (comm >= 1e-10) pass = false;

        const auto spec = rabi::diagonalize(ham, 4, p.n_fock);
        // Raw field elements before the enforcement step.
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2 * p.n_fock, 2 * p.n_fock);
        for (int q = 0; q < 2; ++q)
            for (int n = 0; n + 1 < p.n_fock; ++n) {
                const int base = q * p.n_fock;
                x(base + n, base + n + 1) = x(base + n + 1, base + n) =
                    std::sqrt(n + 1.0);
            }
        const Eigen::MatrixXd vk = spec.states.leftCols(4);
        const Eigen::MatrixXd chi_raw = vk.transpose() * x * vk;
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j)
                if (spec.parities[k] == spec.parities[j] &&
                    std::abs(chi_raw(k, j)) >= 1e-10)
                    pass = false;

        if (go >= 0.55) {
            if (!(spec.parities[0] == spec.parities[2] &&
                  spec.parities[1] != spec.parities[0]))
                pass = false;
        }
        detail += fmt("g/w=%.1f comm=%.1e par(0,1,2)=(%+d,%+d,%+d)  ", go, comm,
                      spec.parities[0], spec.parities[1], spec.parities[2]);
    }
    h.report(1, pass, "parity symmetry and chi selection rules", detail);
}

// --------------------------------------------------------------------------
// 2. Effective coupling constants from the circuit formula.
void criterion_2(Harness& h) {
    circuit::CircuitParams cp;
    cp.phi_o = 3.2911e-15;
    cp.i_c = 1e-3;
    cp.z_ohm = 100.0;
    cp.c_f = 200e-15;
    cp.omega_r = ghz(10.0);
    cp.phi_offset = M_PI / 4.0;
    const auto pq = circuit::effective_pq(cp);

    // Hand evaluation in a different operation order, frozen:
    // (phi_o/(4 I_c)) * (w_r/Z^2) / C / cos(pi/4) = 36554930.09443249 rad/s.
    const double frozen = 36554930.09443249;
    const bool match = std::abs(pq.p - frozen) / frozen < 1e-6;
    const bool symmetric = std::abs(pq.p - pq.q) < 1e-8 * pq.p;
    h.report(2, match && symmetric, "effective coupling constants",
             fmt("P = %.10e rad/s (hand value %.10e, 2pi x %.4f MHz); "
                 "P = Q at pi/4 offset: %s. The 3.655 MHz figure quoted in "
                 "the literature matches these digits only if read as 1e7 "
                 "rad/s and is recorded as an unreconciled unit discrepancy "
                 "(as a frequency the formula gives 2pi x 5.818 MHz).",
                 pq.p, frozen, pq.p / constants::two_pi / 1e6,
                 symmetric ? "yes" : "NO"));
}

// --------------------------------------------------------------------------
// 3. Full flux-driven propagation against the compiled effective gates.
void criterion_3(Harness& h) {
    harness::ExperimentConfig cfg = harness::default_config();
    cfg.validation.abs_tol = 1e-9;
    cfg.validation.n_states = 2;

    cfg.validation.ratio = 0.01;
    const auto xy_1 = harness::validate_gate(cfg, "xy");
    cfg.validation.ratio = 0.005;
    const auto xy_half = harness::validate_gate(cfg, "xy");
    cfg.validation.ratio = 0.01;
    const auto xx_1 = harness::validate_gate(cfg, "xx");

    const double ratio = xy_1.infidelity / xy_half.infidelity;
    const bool pass = xy_1.infidelity < 1e-3 && xy_1.leakage < 1e-3 &&
                      xx_1.infidelity < 1e-3 && xx_1.leakage < 1e-3 &&
                      ratio > 3.0 && ratio < 5.0;
    h.report(3, pass, "gate validation at C/margin = 0.01",
             fmt("xy: infid %.3e leak %.3e | xy at 0.005: infid %.3e -> "
                 "scaling ratio %.2f (need [3,5]) | xx: infid %.3e leak %.3e "
                 "| margin %.4e rad/s; static dispersive scale %.2e rad/s "
                 "(excluded from the scaling study)",
                 xy_1.infidelity, xy_1.leakage, xy_half.infidelity, ratio,
                 xx_1.infidelity, xx_1.leakage, xy_1.margin,
                 xy_1.static_shift_scale));
}

// --------------------------------------------------------------------------
// 4. Trotter convergence of the digital Heisenberg protocol.
void criterion_4(Harness& h) {
    harness::ExperimentConfig cfg = harness::default_config();
    cfg.sampling.n_states = 3;

    auto final_infidelity = [&cfg](int n_o) {
        harness::ExperimentConfig c = cfg;
        c.protocol.n_o = n_o;
        const auto report = harness::run_experiment(c);
        return 1.0 - report.fid_mean.back();
    };
    const double e10 = final_infidelity(10);
    const double e20 = final_infidelity(20);
    const double ratio = e10 / e20;
    const double f400 = 1.0 - final_infidelity(400);

    const bool pass = ratio > 3.0 && ratio < 5.0 && f400 > 0.9999;
    h.report(4, pass, "trotter convergence at the isotropic point",
             fmt("infidelity n_o=10: %.3e, n_o=20: %.3e, ratio %.2f (need "
                 "[3,5]); n_o=400 fidelity %.6f (need > 0.9999)",
                 e10, e20, ratio, f400));
}

// --------------------------------------------------------------------------
// 5. Protocol duration independent of the chain size.
void criterion_5(Harness& h) {
    harness::ExperimentConfig cfg = harness::default_config();
    auto sys = harness::build_system(cfg);

    double durations[3];
    for (int i = 0; i < 3; ++i) {
        harness::ExperimentConfig c = cfg;
        c.n_sites = 2 + i;
        durations[i] = harness::build_schedule(c, *sys).total_duration;
    }
    const bool equal = durations[0] == durations[1] && durations[1] == durations[2];
    const bool matches_paper = std::abs(durations[0] - 0.486e-6) < 1e-9;
    h.report(5, equal && matches_paper, "duration independence of the chain size",
             fmt("N=2,3,4 -> %.9e / %.9e / %.9e s (exactly equal: %s; "
                 "0.486 us reference within 1e-9 s: %s)",
                 durations[0], durations[1], durations[2], equal ? "yes" : "NO",
                 matches_paper ? "yes" : "NO"));
}

// --------------------------------------------------------------------------
// 6+7. Dissipative integrity and the fidelity-vs-size trend.
void criteria_6_and_7(Harness& h) {
    // Detailed balance on a single site at 15 mK, at a transition frequency
    // where the thermal factor is order one.
    const double omega = 1.5e9, temp = 0.015, gamma = 5e7;
    const double nbar = dyn::thermal_occupation(omega, temp);
    dyn::DissipatorSet balance;
    balance.temperature = temp;
    balance.channels.push_back(
        {0, 1, 0, gamma, omega, gamma * (1.0 + nbar), gamma * nbar});
    Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(3, 3);
    rho0(1, 1) = 1.0;
    dyn::PropagationOptions opts;
    opts.abs_tol = 1e-12;
    opts.rel_tol = 1e-12;
    opts.max_step = 2e-10;
    const dyn::ChainBasis single{1, 3};
    const auto traj = dyn::propagate_lindblad_const(
        Eigen::MatrixXcd::Zero(3, 3), balance,
        dyn::ChainState::density(single, rho0), {60.0 / gamma}, opts);
    const double p_ratio = traj.states.back().rho(1, 1).real() /
                           traj.states.back().rho(0, 0).real();
    const double boltzmann =
        std::exp(-constants::hbar * omega / (constants::k_boltzmann * temp));
    const bool balance_ok = std::abs(p_ratio - boltzmann) < 1e-6;

    // Four protocol runs: N = 2, 3 with dissipation on and off, 20 states.
    harness::FidelityReport on[2], off[2];
    double worst_trace = 0.0, worst_eig = 1.0;
    for (int i = 0; i < 2; ++i) {
        harness::ExperimentConfig cfg = harness::default_config();
        cfg.n_sites = 2 + i;
        cfg.dissipation.enabled = false;
        off[i] = harness::run_experiment(cfg);
        cfg.dissipation.enabled = true;
        on[i] = harness::run_experiment(cfg);
        worst_trace = std::max(worst_trace, on[i].max_trace_drift);
        worst_eig = std::min(worst_eig, on[i].min_eigenvalue);
    }

    const bool integrity = worst_trace <= 1e-8 && worst_eig >= -1e-6 &&
                           traj.max_trace_drift <= 1e-8 &&
                           traj.min_eigenvalue >= -1e-6;
    h.report(6, balance_ok && integrity, "lindblad integrity and detailed balance",
             fmt("steady p1/p0 = %.8f vs boltzmann %.8f (|diff| %.1e, need "
                 "< 1e-6); protocol-run trace drift %.2e (need <= 1e-8), min "
                 "eigenvalue %.2e (need >= -1e-6)",
                 p_ratio, boltzmann, std::abs(p_ratio - boltzmann), worst_trace,
                 worst_eig));

    const double f_on2 = on[0].fid_mean.back(), f_off2 = off[0].fid_mean.back();
    const double f_on3 = on[1].fid_mean.back(), f_off3 = off[1].fid_mean.back();
    const bool below = f_on2 < f_off2 && f_on3 < f_off3;
    const bool monotone = f_on3 <= f_on2;
    h.report(7, below && monotone, "dissipative fidelity trend across chain sizes",
             fmt("final mean fidelity: N=2 %.6f (closed %.6f), N=3 %.6f "
                 "(closed %.6f); dissipative strictly below closed: %s; "
                 "non-increasing with N: %s [20 seeded states]",
                 f_on2, f_off2, f_on3, f_off3, below ? "yes" : "NO",
                 monotone ? "yes" : "NO"));
}

// --------------------------------------------------------------------------
// 8. Oracle identities.
void criterion_8(Harness& h) {
    const auto& o = spin1::ops();
    const auto& r = spin1::rotations();
    bool pass = true;

    // Coupling-map identity at N = 2 and 3.
    for (int n : {2, 3}) {
        const double c_xy = 0.25, c_yz = 0.4, c_zx = 0.15;
        spin1::ModelSpec spec;
        spec.kind = spin1::ModelKind::heisenberg;
        spec.n_sites = n;
        spec.lambda_x = c_xy + c_zx;
        spec.lambda_y = c_xy + c_yz;
        spec.lambda_z = c_yz + c_zx;
        const Eigen::MatrixXcd lhs = spin1::model_hamiltonian(spec);
        const Eigen::MatrixXcd rhs =
            c_xy * (spin1::chain_sum_bond(o.sx, o.sx, n) +
                    spin1::chain_sum_bond(o.sy, o.sy, n)) +
            c_yz * (spin1::chain_sum_bond(o.sy, o.sy, n) +
                    spin1::chain_sum_bond(o.sz, o.sz, n)) +
            c_zx * (spin1::chain_sum_bond(o.sz, o.sz, n) +
                    spin1::chain_sum_bond(o.sx, o.sx, n));
        if ((lhs - rhs).norm() > 1e-12 * lhs.norm()) pass = false;
    }

    // Rotation conjugations map the XY pair onto the YZ and ZX pairs.
    const Eigen::MatrixXcd ry2 = linalg::kron(Eigen::MatrixXcd(r.ry), Eigen::MatrixXcd(r.ry));
    const Eigen::MatrixXcd rx2 = linalg::kron(Eigen::MatrixXcd(r.rx), Eigen::MatrixXcd(r.rx));
    const Eigen::MatrixXcd h_xy = spin1::chain_sum_bond(o.sx, o.sx, 2) +
                                  spin1::chain_sum_bond(o.sy, o.sy, 2);
    const Eigen::MatrixXcd h_yz = spin1::chain_sum_bond(o.sy, o.sy, 2) +
                                  spin1::chain_sum_bond(o.sz, o.sz, 2);
    const Eigen::MatrixXcd h_zx = spin1::chain_sum_bond(o.sz, o.sz, 2) +
                                  spin1::chain_sum_bond(o.sx, o.sx, 2);
    if ((ry2.adjoint() * h_xy * ry2 - h_yz).norm() > 1e-12) pass = false;
    if ((rx2 * h_xy * rx2.adjoint() - h_zx).norm() > 1e-12) pass = false;

    // Uhlmann fidelity of pure states reduces to the overlap.
    const auto psi = spin1::haar_random_state(9, 31);
    const auto phi = spin1::haar_random_state(9, 32);
    const double full =
        spin1::uhlmann_fidelity(psi * psi.adjoint(), phi * phi.adjoint());
    const double overlap = std::abs(psi.dot(phi));
    if (std::abs(full - overlap) > 1e-10) pass = false;

    h.report(8, pass, "oracle identities",
             fmt("coupling-map and rotation-conjugation identities hold at "
                 "1e-12; uhlmann pure-state reduction |F - overlap| = %.1e",
                 std::abs(full - overlap)));
}

} // namespace

int main() {
    Harness h;
    criterion_1(h);
    criterion_2(h);
    criterion_4(h);
    criterion_5(h);
    criteria_6_and_7(h);
    criterion_8(h);
    criterion_3(h);  // slowest last
    if (h.failures == 0)
        std::printf("ACCEPTANCE: all criteria passed\n");
    else
        std::printf("ACCEPTANCE: %d criterion(s) FAILED\n", h.failures);
    return h.failures == 0 ? 0 : 1;
}
