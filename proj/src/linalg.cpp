#include "qrsim/linalg.hpp"

#include "qrsim/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace qrsim::linalg {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXd kron_real(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double fro_norm(const Eigen::MatrixXcd& a) { return a.norm(); }

Eigen::MatrixXcd mul(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("mul: shape mismatch");
    Eigen::MatrixXcd c(a.rows(), b.cols());
    kernels::gemm(a.data(), b.data(), c.data(),
                  static_cast<std::size_t>(a.rows()),
                  static_cast<std::size_t>(a.cols()),
                  static_cast<std::size_t>(b.cols()));
    return c;
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd c = mul(a, b);
    Eigen::MatrixXcd d = mul(b, a);
    c -= d;
    return c;
}

void hermitize(Eigen::MatrixXcd& a) {
    Eigen::MatrixXcd adj = a.adjoint();
    a = 0.5 * (a + adj);
}

Eigen::MatrixXcd expm_hermitian(const Eigen::MatrixXcd& h, cxd factor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("expm_hermitian: eigendecomposition failed");
    const Eigen::Index n = h.rows();
    Eigen::MatrixXcd scaled(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        scaled.col(j) = es.eigenvectors().col(j) * std::exp(factor * es.eigenvalues()(j));
    Eigen::MatrixXcd vdag = es.eigenvectors().adjoint();
    return mul(scaled, vdag);
}

Eigen::MatrixXcd unitary_of(const Eigen::MatrixXcd& h, double t) {
    return expm_hermitian(h, cxd{0.0, -t});
}

namespace {

double one_norm(const Eigen::MatrixXcd& a) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
        if (s > best) best = s;
    }
    return best;
}

} // namespace

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a_in) {
    if (a_in.rows() != a_in.cols()) throw std::invalid_argument("expm: square only");
    const Eigen::Index n = a_in.rows();
    // Higham's degree-13 Pade coefficients.
    static const double b[] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    const double theta13 = 5.371920351148152;

    Eigen::MatrixXcd a = a_in;
    const double nrm = one_norm(a);
    int squarings = 0;
    if (nrm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
        a *= std::pow(2.0, -squarings);
    }

    Eigen::MatrixXcd ident = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd a2 = mul(a, a);
    Eigen::MatrixXcd a4 = mul(a2, a2);
    Eigen::MatrixXcd a6 = mul(a2, a4);

    Eigen::MatrixXcd u_inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
    Eigen::MatrixXcd u = mul(a6, u_inner);
    u += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
    u = mul(a, u);

    Eigen::MatrixXcd v_inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
    Eigen::MatrixXcd v = mul(a6, v_inner);
    v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

    Eigen::MatrixXcd num = v + u;
    Eigen::MatrixXcd den = v - u;
    Eigen::MatrixXcd r = den.partialPivLu().solve(num);

    for (int s = 0; s < squarings; ++s) r = mul(r, r);
    return r;
}

} // namespace qrsim::linalg
