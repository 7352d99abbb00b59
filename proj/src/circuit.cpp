#include "qrsim/circuit.hpp"

#include "qrsim/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace qrsim::circuit {

void CircuitParams::validate() const {
    if (!(phi_o > 0.0) || !(i_c > 0.0) || !(z_ohm > 0.0) || !(c_f > 0.0) ||
        !(omega_r > 0.0))
        throw std::invalid_argument("CircuitParams: all parameters must be > 0");
    if (!(std::abs(phi_offset) < M_PI / 2.0))
        throw std::invalid_argument("CircuitParams: |phi_offset| must be < pi/2");
}

PQ effective_pq(const CircuitParams& params) {
    params.validate();
    const double c = std::cos(params.phi_offset);
    if (c <= 0.0) throw std::invalid_argument("effective_pq: cos(phi_offset) <= 0");
    const double base = params.phi_o * params.omega_r /
                        (4.0 * params.i_c * params.z_ohm * params.z_ohm * params.c_f);
    return PQ{base / c, base * std::sin(params.phi_offset) / (c * c)};
}

double FluxSignal::eval(double t) const {
    double v = dc;
    for (const auto& tone : tones) v += tone.amplitude * std::cos(tone.omega * t + tone.phase);
    return v;
}

double FluxSignal::peak_estimate() const {
    double v = std::abs(dc);
    for (const auto& tone : tones) v += std::abs(tone.amplitude);
    return v;
}

double FluxSignal::max_omega() const {
    double v = 0.0;
    for (const auto& tone : tones) v = std::max(v, std::abs(tone.omega));
    return v;
}

int ChainConfig::dim() const {
    int d = 1;
    for (int i = 0; i < n_sites(); ++i) d *= n_kept();
    return d;
}

void ChainConfig::validate() const {
    if (n_sites() < 2) throw std::invalid_argument("ChainConfig: need at least 2 sites");
    if (p < 0.0 || q < 0.0) throw std::invalid_argument("ChainConfig: P,Q must be >= 0");
    const int nk = n_kept();
    for (const auto* site : sites) {
        if (!site) throw std::invalid_argument("ChainConfig: null site");
        if (site->n_kept() != nk)
            throw std::invalid_argument("ChainConfig: inconsistent n_kept across sites");
    }
    for (int i = 0; i + 1 < n_sites(); ++i) {
        if (sites[i]->params.species == sites[i + 1]->params.species)
            throw std::invalid_argument(
                "ChainConfig: adjacent sites must be different species");
    }
}

Eigen::MatrixXd embed_site_operator(const Eigen::MatrixXd& op, int site,
                                    int n_sites, int n_kept) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
    for (int s = 0; s < n_sites; ++s) {
        const Eigen::MatrixXd& factor =
            (s == site) ? op : Eigen::MatrixXd::Identity(n_kept, n_kept);
        out = linalg::kron_real(out, factor);
    }
    return out;
}

namespace {

// Two-site product term A_site (x) B_{site+1} embedded in the chain.
Eigen::MatrixXd embed_bond_operator(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                    int left_site, int n_sites, int n_kept) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
    for (int s = 0; s < n_sites; ++s) {
        const Eigen::MatrixXd& factor =
            (s == left_site) ? a
            : (s == left_site + 1) ? b
                                   : Eigen::MatrixXd::Identity(n_kept, n_kept);
        out = linalg::kron_real(out, factor);
    }
    return out;
}

} // namespace

Eigen::MatrixXd build_static_chain(const ChainConfig& chain) {
    chain.validate();
    const int ns = chain.n_sites();
    const int nk = chain.n_kept();
    const int dim = chain.dim();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);

    for (int s = 0; s < ns; ++s) {
        const auto& site = *chain.sites[s];
        const double p_sum = site.p_left + site.p_right;
        Eigen::MatrixXd local = site.epsilon.asDiagonal();
        // Off-diagonal parity-preserving z terms; the diagonal already lives
        // in epsilon.
        Eigen::MatrixXd z_off = site.z;
        z_off.diagonal().setZero();
        local += p_sum * z_off;
        h += embed_site_operator(local, s, ns, nk);
    }
    for (int s = 0; s + 1 < ns; ++s) {
        h += -2.0 * chain.p *
             embed_bond_operator(chain.sites[s]->chi, chain.sites[s + 1]->chi, s, ns, nk);
    }
    return h;
}

Eigen::MatrixXd build_modulated_chain(const ChainConfig& chain,
                                      const std::vector<FluxSignal>& signals,
                                      double t) {
    chain.validate();
    const int ns = chain.n_sites();
    const int nk = chain.n_kept();
    if (static_cast<int>(signals.size()) != ns - 1)
        throw std::invalid_argument("build_modulated_chain: need one signal per SQUID");

    Eigen::MatrixXd h = build_static_chain(chain);
    for (int s = 0; s < ns; ++s) {
        double flux = 0.0;
        if (s > 0) flux += signals[s - 1].eval(t);
        if (s + 1 < ns) flux += signals[s].eval(t);
        if (flux == 0.0) continue;
        h += chain.q * flux * embed_site_operator(chain.sites[s]->z, s, ns, nk);
    }
    for (int s = 0; s + 1 < ns; ++s) {
        const double flux = signals[s].eval(t);
        if (flux == 0.0) continue;
        h += -2.0 * chain.q * flux *
             embed_bond_operator(chain.sites[s]->chi, chain.sites[s + 1]->chi, s, ns, nk);
    }
    return h;
}

Eigen::VectorXd chain_parity_diagonal(const ChainConfig& chain) {
    const int ns = chain.n_sites();
    const int nk = chain.n_kept();
    Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
    for (int s = 0; s < ns; ++s) {
        Eigen::VectorXd site_par(nk);
        for (int l = 0; l < nk; ++l)
            site_par(l) = chain.sites[s]->spectrum.parities[l];
        Eigen::VectorXd next(out.size() * nk);
        for (Eigen::Index i = 0; i < out.size(); ++i)
            for (int l = 0; l < nk; ++l) next(i * nk + l) = out(i) * site_par(l);
        out = std::move(next);
    }
    return out;
}

double resonator_mode_wavenumber(ResonatorPosition pos, int n, double length) {
    if (length <= 0.0) throw std::invalid_argument("resonator mode: length must be > 0");
    if (n < 0) throw std::invalid_argument("resonator mode: n must be >= 0");
    if (pos == ResonatorPosition::bulk) {
        if (n == 0) throw std::invalid_argument("resonator mode: bulk n=0 is the null mode");
        return n * M_PI / length;
    }
    return (n + 0.5) * M_PI / length;
}

} // namespace qrsim::circuit
