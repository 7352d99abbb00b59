// Scalar reference implementations. These define the semantics the SIMD
// variants are tested against.

#include "qrsim/kernels.hpp"

namespace qrsim::kernels::detail {

void axpy_scalar(cxd a, const cxd* x, cxd* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_rc_scalar(cxd a, const double* x, cxd* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_real_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(cxd a, cxd* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void vmul_scalar(const cxd* x, const cxd* y, cxd* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void vmul_conj_scalar(const cxd* x, const cxd* y, cxd* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = std::conj(x[i]) * y[i];
}

cxd dotc_scalar(const cxd* x, const cxd* y, std::size_t n) {
    cxd acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) acc += std::conj(x[i]) * y[i];
    return acc;
}

double norm_sq_scalar(const cxd* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    return acc;
}

} // namespace qrsim::kernels::detail
