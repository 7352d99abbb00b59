#include "qrsim/rabi.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qrsim::rabi {

namespace {

constexpr double kParityTol = 1e-6;

// a + a^dag on the Fock factor.
Eigen::MatrixXd quadrature_fock(int n_fock) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_fock, n_fock);
    for (int n = 0; n + 1 < n_fock; ++n) {
        const double v = std::sqrt(static_cast<double>(n + 1));
        x(n, n + 1) = v;
        x(n + 1, n) = v;
    }
    return x;
}

// Full-space quadrature I_2 (x) X.
Eigen::MatrixXd quadrature_full(int n_fock) {
    const Eigen::MatrixXd x = quadrature_fock(n_fock);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n_fock, 2 * n_fock);
    out.topLeftCorner(n_fock, n_fock) = x;
    out.bottomRightCorner(n_fock, n_fock) = x;
    return out;
}

} // namespace

void QrsParams::validate() const {
    if (!(omega_q > 0.0)) throw std::invalid_argument("QrsParams: omega_q must be > 0");
    if (!(omega_r > 0.0)) throw std::invalid_argument("QrsParams: omega_r must be > 0");
    if (g < 0.0) throw std::invalid_argument("QrsParams: g must be >= 0");
    if (n_fock < 2) throw std::invalid_argument("QrsParams: n_fock must be >= 2");
}

Eigen::VectorXd parity_diagonal(int n_fock) {
    Eigen::VectorXd d(2 * n_fock);
    for (int q = 0; q < 2; ++q)
        for (int n = 0; n < n_fock; ++n)
            d(q * n_fock + n) = ((n + q) % 2 == 0) ? 1.0 : -1.0;
    return d;
}

Eigen::MatrixXd build_rabi_hamiltonian(const QrsParams& params) {
    params.validate();
    const int nf = params.n_fock;
    const int dim = 2 * nf;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int q = 0; q < 2; ++q) {
        const double qz = (q == 0) ? -1.0 : 1.0;
        for (int n = 0; n < nf; ++n) {
            const int idx = q * nf + n;
            h(idx, idx) = 0.5 * params.omega_q * qz + params.omega_r * n;
        }
    }
    // g sigma_x (a + a^dag): sigma_x swaps the q blocks.
    const Eigen::MatrixXd x = quadrature_fock(nf);
    h.block(0, nf, nf, nf) += params.g * x;
    h.block(nf, 0, nf, nf) += params.g * x;
    return h;
}

int parity_label(const Eigen::VectorXd& state, int n_fock, double* quality) {
    const Eigen::VectorXd pd = parity_diagonal(n_fock);
    if (state.size() != pd.size())
        throw std::invalid_argument("parity_label: state/basis size mismatch");
    double expect = 0.0;
    for (Eigen::Index i = 0; i < state.size(); ++i)
        expect += pd(i) * state(i) * state(i);
    if (quality) *quality = std::abs(expect);
    return expect >= 0.0 ? 1 : -1;
}

QrsSpectrum diagonalize(const Eigen::MatrixXd& h, int n_kept, int n_fock) {
    if (h.rows() != h.cols()) throw std::invalid_argument("diagonalize: square only");
    if (h.rows() != 2 * static_cast<Eigen::Index>(n_fock))
        throw std::invalid_argument("diagonalize: dim != 2*n_fock");
    if (n_kept < 1 || n_kept > h.rows())
        throw std::invalid_argument("diagonalize: n_kept out of range");
    if ((h - h.transpose()).norm() > 1e-12 * std::max(1.0, h.norm()))
        throw std::invalid_argument("diagonalize: matrix not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("diagonalize: eigendecomposition failed");

    QrsSpectrum spec;
    spec.energies = es.eigenvalues();
    spec.states = es.eigenvectors();
    spec.n_kept = n_kept;
    spec.n_fock = n_fock;

    // Rotate near-degenerate clusters into parity eigenstates so the labels
    // stay sharp deep in the USC regime.
    const Eigen::VectorXd pd = parity_diagonal(n_fock);
    const double scale = std::max(std::abs(spec.energies(0)),
                                  std::abs(spec.energies(spec.dim() - 1)));
    const double degen_tol = 1e-10 * std::max(scale, 1.0);
    int i = 0;
    while (i < spec.dim()) {
        int j = i + 1;
        while (j < spec.dim() && spec.energies(j) - spec.energies(i) <= degen_tol) ++j;
        if (j - i > 1) {
            const int w = j - i;
            Eigen::MatrixXd block(w, w);
            for (int r = 0; r < w; ++r)
                for (int c = 0; c < w; ++c)
                    block(r, c) = spec.states.col(i + r)
                                      .cwiseProduct(pd)
                                      .dot(spec.states.col(i + c));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bes(block);
            spec.states.middleCols(i, w) = spec.states.middleCols(i, w) * bes.eigenvectors();
        }
        i = j;
    }

    // Deterministic sign: largest-magnitude component positive.
    for (int c = 0; c < spec.dim(); ++c) {
        Eigen::Index imax = 0;
        spec.states.col(c).cwiseAbs().maxCoeff(&imax);
        if (spec.states(imax, c) < 0.0) spec.states.col(c) *= -1.0;
    }

    spec.parities.resize(spec.dim());
    spec.parity_quality.resize(spec.dim());
    for (int c = 0; c < spec.dim(); ++c) {
        double quality = 0.0;
        spec.parities[c] = parity_label(spec.states.col(c), n_fock, &quality);
        spec.parity_quality[c] = quality;
        if (c < n_kept && quality < 1.0 - kParityTol) {
            std::ostringstream msg;
            msg << "diagonalize: kept level " << c << " has |<Pi>| = " << quality
                << "; cutoff too small or unresolved degeneracy";
            throw std::runtime_error(msg.str());
        }
    }
    return spec;
}

Eigen::MatrixXd chi_elements(const QrsSpectrum& spec) {
    const int nk = spec.n_kept;
    const Eigen::MatrixXd x = quadrature_full(spec.n_fock);
    const Eigen::MatrixXd vk = spec.states.leftCols(nk);
    Eigen::MatrixXd chi = vk.transpose() * x * vk;
    for (int k = 0; k < nk; ++k) {
        for (int j = 0; j < nk; ++j) {
            if (spec.parities[k] == spec.parities[j]) {
                if (std::abs(chi(k, j)) > 1e-8)
                    throw std::runtime_error(
                        "chi_elements: same-parity element above 1e-8; "
                        "parity selection rule violated numerically");
                chi(k, j) = 0.0;
            }
        }
    }
    return chi;
}

Eigen::MatrixXd z_elements(const QrsSpectrum& spec) {
    const int nk = spec.n_kept;
    const Eigen::MatrixXd x = quadrature_full(spec.n_fock);
    const Eigen::MatrixXd vk = spec.states.leftCols(nk);

    // Direct (a+a^dag)^2 sandwich.
    Eigen::MatrixXd z = vk.transpose() * (x * x) * vk;

    // chi.chi summed over every level below the cutoff, not just kept ones.
    const Eigen::MatrixXd chi_tall = x * vk;             // full x kept
    const Eigen::MatrixXd chi_all = spec.states.transpose() * chi_tall;
    const Eigen::MatrixXd z_sum = chi_all.transpose() * chi_all;

    const double scale = std::max(z.cwiseAbs().maxCoeff(), 1e-300);
    if (((z - z_sum).cwiseAbs().maxCoeff() / scale) > 1e-6)
        throw std::runtime_error(
            "z_elements: direct and summed forms disagree; kept-level "
            "truncation too aggressive for the operator-square identity");

    for (int k = 0; k < nk; ++k) {
        for (int j = 0; j < nk; ++j) {
            if (spec.parities[k] != spec.parities[j]) {
                if (std::abs(z(k, j)) > 1e-8)
                    throw std::runtime_error(
                        "z_elements: opposite-parity element above 1e-8");
                z(k, j) = 0.0;
            }
        }
    }
    return z;
}

Eigen::VectorXd dressed_energies(const QrsSpectrum& spec, const Eigen::MatrixXd& z,
                                 double p_left, double p_right) {
    if (p_left < 0.0 || p_right < 0.0)
        throw std::invalid_argument("dressed_energies: P values must be >= 0");
    const int nk = spec.n_kept;
    Eigen::VectorXd eps(nk);
    for (int j = 0; j < nk; ++j)
        eps(j) = spec.energies(j) + (p_left + p_right) * z(j, j);
    return eps;
}

DressedSite make_dressed_site(const QrsParams& params, int n_kept,
                              double p_left, double p_right) {
    DressedSite site;
    site.params = params;
    site.spectrum = diagonalize(build_rabi_hamiltonian(params), n_kept, params.n_fock);
    site.chi = chi_elements(site.spectrum);
    site.z = z_elements(site.spectrum);
    site.epsilon = dressed_energies(site.spectrum, site.z, p_left, p_right);
    site.p_left = p_left;
    site.p_right = p_right;

    const int nf = params.n_fock;
    const Eigen::MatrixXd vk = site.spectrum.states.leftCols(n_kept);
    Eigen::MatrixXd sx = Eigen::MatrixXd::Zero(2 * nf, 2 * nf);
    sx.block(0, nf, nf, nf).setIdentity();
    sx.block(nf, 0, nf, nf).setIdentity();
    Eigen::MatrixXd sz = Eigen::MatrixXd::Zero(2 * nf, 2 * nf);
    sz.topLeftCorner(nf, nf) = -Eigen::MatrixXd::Identity(nf, nf);
    sz.bottomRightCorner(nf, nf) = Eigen::MatrixXd::Identity(nf, nf);
    site.sigma_x = vk.transpose() * sx * vk;
    site.sigma_z = vk.transpose() * sz * vk;
    return site;
}

} // namespace qrsim::rabi
