#pragma once
// Low-level dense complex kernels behind the propagators and matrix
// exponentials. All matrices are column-major (Eigen's default layout).
//
// Every primitive has a scalar reference implementation and an AVX2+FMA
// variant. The active variant is picked once from CPUID; it can be pinned
// with the QRSIM_KERNELS environment variable ("scalar" / "avx2") or with
// force_isa(). Composite routines (gemv/gemm/phase_frame) are built on the
// dispatched primitives.

#include <complex>
#include <cstddef>

namespace qrsim::kernels {

using cxd = std::complex<double>;

enum class Isa { scalar, avx2 };

Isa active_isa();
const char* isa_name(Isa isa);
// Tests only. Requesting avx2 on a machine without it falls back to scalar.
void force_isa(Isa isa);

// ---- primitives (per-ISA implementations) ----

// y += a * x
void axpy(cxd a, const cxd* x, cxd* y, std::size_t n);
// y += a * x with real x, complex a and y
void axpy_rc(cxd a, const double* x, cxd* y, std::size_t n);
// y += a * x, all real
void axpy_real(double a, const double* x, double* y, std::size_t n);
// x *= a
void scal(cxd a, cxd* x, std::size_t n);
// z = x .* y
void vmul(const cxd* x, const cxd* y, cxd* z, std::size_t n);
// z = conj(x) .* y
void vmul_conj(const cxd* x, const cxd* y, cxd* z, std::size_t n);
// sum_i conj(x_i) * y_i
cxd dotc(const cxd* x, const cxd* y, std::size_t n);
// sum_i |x_i|^2
double norm_sq(const cxd* x, std::size_t n);

// ---- composites ----

// y (+)= A x, A column-major m-by-n
void gemv(const cxd* a, std::size_t m, std::size_t n, const cxd* x, cxd* y,
          bool accumulate = false);
// y (+)= A x with real A, complex x and y
void gemv_real(const double* a, std::size_t m, std::size_t n, const cxd* x,
               cxd* y, bool accumulate = false);
// C (+)= A B, column-major, A m-by-k, B k-by-n
void gemm(const cxd* a, const cxd* b, cxd* c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate = false);
// H_ij *= p_i * conj(p_j), H column-major dim-by-dim
void phase_frame(cxd* h, const cxd* p, std::size_t dim);

} // namespace qrsim::kernels
