// Runtime ISA dispatch and the composite routines.

#include "qrsim/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

namespace qrsim::kernels {

namespace detail {

void axpy_scalar(cxd, const cxd*, cxd*, std::size_t);
void axpy_rc_scalar(cxd, const double*, cxd*, std::size_t);
void axpy_real_scalar(double, const double*, double*, std::size_t);
void scal_scalar(cxd, cxd*, std::size_t);
void vmul_scalar(const cxd*, const cxd*, cxd*, std::size_t);
void vmul_conj_scalar(const cxd*, const cxd*, cxd*, std::size_t);
cxd dotc_scalar(const cxd*, const cxd*, std::size_t);
double norm_sq_scalar(const cxd*, std::size_t);

#if defined(__x86_64__) || defined(_M_X64)
void axpy_avx2(cxd, const cxd*, cxd*, std::size_t);
void axpy_rc_avx2(cxd, const double*, cxd*, std::size_t);
void axpy_real_avx2(double, const double*, double*, std::size_t);
void scal_avx2(cxd, cxd*, std::size_t);
void vmul_avx2(const cxd*, const cxd*, cxd*, std::size_t);
void vmul_conj_avx2(const cxd*, const cxd*, cxd*, std::size_t);
cxd dotc_avx2(const cxd*, const cxd*, std::size_t);
double norm_sq_avx2(const cxd*, std::size_t);
#endif

} // namespace detail

namespace {

struct Table {
    Isa isa;
    void (*axpy)(cxd, const cxd*, cxd*, std::size_t);
    void (*axpy_rc)(cxd, const double*, cxd*, std::size_t);
    void (*axpy_real)(double, const double*, double*, std::size_t);
    void (*scal)(cxd, cxd*, std::size_t);
    void (*vmul)(const cxd*, const cxd*, cxd*, std::size_t);
    void (*vmul_conj)(const cxd*, const cxd*, cxd*, std::size_t);
    cxd (*dotc)(const cxd*, const cxd*, std::size_t);
    double (*norm_sq)(const cxd*, std::size_t);
};

constexpr Table kScalarTable{
    Isa::scalar,
    detail::axpy_scalar,  detail::axpy_rc_scalar, detail::axpy_real_scalar,
    detail::scal_scalar,  detail::vmul_scalar,    detail::vmul_conj_scalar,
    detail::dotc_scalar,  detail::norm_sq_scalar,
};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2Table{
    Isa::avx2,
    detail::axpy_avx2,  detail::axpy_rc_avx2, detail::axpy_real_avx2,
    detail::scal_avx2,  detail::vmul_avx2,    detail::vmul_conj_avx2,
    detail::dotc_avx2,  detail::norm_sq_avx2,
};
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* pick_table(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
    if (isa == Isa::avx2 && cpu_has_avx2()) return &kAvx2Table;
#else
    (void)isa;
#endif
    return &kScalarTable;
}

const Table* initial_table() {
    if (const char* env = std::getenv("QRSIM_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &kScalarTable;
        if (std::strcmp(env, "avx2") == 0) return pick_table(Isa::avx2);
    }
    return pick_table(cpu_has_avx2() ? Isa::avx2 : Isa::scalar);
}

const Table* g_table = initial_table();

} // namespace

Isa active_isa() { return g_table->isa; }

const char* isa_name(Isa isa) {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

void force_isa(Isa isa) { g_table = pick_table(isa); }

void axpy(cxd a, const cxd* x, cxd* y, std::size_t n) { g_table->axpy(a, x, y, n); }
void axpy_rc(cxd a, const double* x, cxd* y, std::size_t n) { g_table->axpy_rc(a, x, y, n); }
void axpy_real(double a, const double* x, double* y, std::size_t n) { g_table->axpy_real(a, x, y, n); }
void scal(cxd a, cxd* x, std::size_t n) { g_table->scal(a, x, n); }
void vmul(const cxd* x, const cxd* y, cxd* z, std::size_t n) { g_table->vmul(x, y, z, n); }
void vmul_conj(const cxd* x, const cxd* y, cxd* z, std::size_t n) { g_table->vmul_conj(x, y, z, n); }
cxd dotc(const cxd* x, const cxd* y, std::size_t n) { return g_table->dotc(x, y, n); }
double norm_sq(const cxd* x, std::size_t n) { return g_table->norm_sq(x, n); }

void gemv(const cxd* a, std::size_t m, std::size_t n, const cxd* x, cxd* y,
          bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < m; ++i) y[i] = cxd{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
        if (x[j] != cxd{0.0, 0.0}) axpy(x[j], a + j * m, y, m);
    }
}

void gemv_real(const double* a, std::size_t m, std::size_t n, const cxd* x,
               cxd* y, bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < m; ++i) y[i] = cxd{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
        if (x[j] != cxd{0.0, 0.0}) axpy_rc(x[j], a + j * m, y, m);
    }
}

void gemm(const cxd* a, const cxd* b, cxd* c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < m * n; ++i) c[i] = cxd{0.0, 0.0};
    // Block over the contraction index so the touched panel of A stays hot.
    constexpr std::size_t kb = 48;
    for (std::size_t k0 = 0; k0 < k; k0 += kb) {
        const std::size_t k1 = (k0 + kb < k) ? k0 + kb : k;
        for (std::size_t j = 0; j < n; ++j) {
            const cxd* bj = b + j * k;
            cxd* cj = c + j * m;
            for (std::size_t kk = k0; kk < k1; ++kk) {
                if (bj[kk] != cxd{0.0, 0.0}) axpy(bj[kk], a + kk * m, cj, m);
            }
        }
    }
}

void phase_frame(cxd* h, const cxd* p, std::size_t dim) {
    for (std::size_t j = 0; j < dim; ++j) {
        cxd* col = h + j * dim;
        vmul(p, col, col, dim);
        scal(std::conj(p[j]), col, dim);
    }
}

} // namespace qrsim::kernels
