#include "qrsim/spin1.hpp"

#include "qrsim/linalg.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qrsim::spin1 {

namespace {

Spin1Ops make_ops() {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Spin1Ops o;
    o.sx.setZero();
    o.sy.setZero();
    // Sx = (|1><0| + |2><1| + h.c.)/sqrt(2)
    o.sx(1, 0) = o.sx(0, 1) = inv_sqrt2;
    o.sx(2, 1) = o.sx(1, 2) = inv_sqrt2;
    // Sy = (-i|1><0| - i|2><1| + h.c.)/sqrt(2)
    o.sy(1, 0) = cxd{0.0, -inv_sqrt2};
    o.sy(0, 1) = cxd{0.0, inv_sqrt2};
    o.sy(2, 1) = cxd{0.0, -inv_sqrt2};
    o.sy(1, 2) = cxd{0.0, inv_sqrt2};
    o.sz = cxd{0.0, -1.0} * (o.sx * o.sy - o.sy * o.sx);
    return o;
}

Eigen::MatrixXcd embed3(const Eigen::Matrix3cd& op, int site, int n_sites) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = 0; s < n_sites; ++s) {
        const Eigen::MatrixXcd factor =
            (s == site) ? Eigen::MatrixXcd(op) : Eigen::MatrixXcd(Eigen::Matrix3cd::Identity());
        out = linalg::kron(out, factor);
    }
    return out;
}

} // namespace

const Spin1Ops& ops() {
    static const Spin1Ops o = make_ops();
    return o;
}

void ModelSpec::validate() const {
    if (n_sites < 2) throw std::invalid_argument("ModelSpec: n_sites must be >= 2");
}

Eigen::MatrixXcd chain_sum_single(const Eigen::Matrix3cd& op, int n_sites) {
    int dim = 1;
    for (int s = 0; s < n_sites; ++s) dim *= 3;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int s = 0; s < n_sites; ++s) h += embed3(op, s, n_sites);
    return h;
}

Eigen::MatrixXcd chain_sum_bond(const Eigen::Matrix3cd& a, const Eigen::Matrix3cd& b,
                                int n_sites) {
    int dim = 1;
    for (int s = 0; s < n_sites; ++s) dim *= 3;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int s = 0; s + 1 < n_sites; ++s) {
        Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(1, 1);
        for (int p = 0; p < n_sites; ++p) {
            const Eigen::MatrixXcd factor =
                (p == s) ? Eigen::MatrixXcd(a)
                : (p == s + 1) ? Eigen::MatrixXcd(b)
                               : Eigen::MatrixXcd(Eigen::Matrix3cd::Identity());
            term = linalg::kron(term, factor);
        }
        h += term;
    }
    return h;
}

Eigen::MatrixXcd model_hamiltonian(const ModelSpec& spec) {
    spec.validate();
    const auto& o = ops();
    switch (spec.kind) {
        case ModelKind::heisenberg:
        case ModelKind::xxz:
            return spec.lambda_x * chain_sum_bond(o.sx, o.sx, spec.n_sites) +
                   spec.lambda_y * chain_sum_bond(o.sy, o.sy, spec.n_sites) +
                   spec.lambda_z * chain_sum_bond(o.sz, o.sz, spec.n_sites);
        case ModelKind::ising:
            return spec.j * chain_sum_bond(o.sx, o.sx, spec.n_sites) +
                   spec.b * chain_sum_single(o.sx, spec.n_sites);
    }
    throw std::invalid_argument("model_hamiltonian: unknown kind");
}

Eigen::MatrixXcd exact_propagator(const Eigen::MatrixXcd& h, double t) {
    if (h.rows() > 81)
        throw std::invalid_argument("exact_propagator: dense path capped at 3^4");
    return linalg::unitary_of(h, t);
}

double uhlmann_fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
        throw std::invalid_argument("uhlmann_fidelity: dimension mismatch");

    // Eigenvalues in the numerical null space are pinned to exact zero:
    // sqrt() would otherwise lift 1e-16 noise to 1e-8 in the trace.
    auto clipped_sqrt = [](const Eigen::MatrixXcd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
        Eigen::VectorXd vals = es.eigenvalues();
        const double floor = 1e-13 * std::max(1.0, vals.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < vals.size(); ++i) {
            if (vals(i) < -1e-6)
                throw std::runtime_error("uhlmann_fidelity: eigenvalue below -1e-6");
            vals(i) = vals(i) > floor ? std::sqrt(vals(i)) : 0.0;
        }
        return Eigen::MatrixXcd(es.eigenvectors() * vals.asDiagonal() *
                                es.eigenvectors().adjoint());
    };

    const Eigen::MatrixXcd sqrt_rho = clipped_sqrt(rho);
    Eigen::MatrixXcd inner = sqrt_rho * sigma * sqrt_rho;
    linalg::hermitize(inner);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner);
    const double floor =
        1e-13 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    double f = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double v = es.eigenvalues()(i);
        if (v < -1e-6)
            throw std::runtime_error("uhlmann_fidelity: inner eigenvalue below -1e-6");
        if (v > floor) f += std::sqrt(v);
    }
    return f;
}

Eigen::VectorXcd haar_random_state(int dim, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("haar_random_state: dim must be >= 1");
    std::mt19937_64 eng(seed);
    auto uniform = [&eng]() {
        // 53-bit mantissa in (0, 1]; avoids log(0) below.
        return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
    };
    Eigen::VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        v(i) = cxd{r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }
    v /= v.norm();
    return v;
}

const Rotations& rotations() {
    static const Rotations r = [] {
        Rotations out;
        out.rx = linalg::unitary_of(ops().sx, M_PI / 2.0);
        out.ry = linalg::unitary_of(ops().sy, M_PI / 2.0);
        return out;
    }();
    return r;
}

} // namespace qrsim::spin1
