// AVX2+FMA variants. Two complex doubles per 256-bit vector, interleaved
// [re0, im0, re1, im1]. This TU is compiled with -mavx2 -mfma; it is only
// entered when the dispatcher has verified CPU support.

#include "qrsim/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace qrsim::kernels::detail {

namespace {

// z = x * y on two packed complex doubles
inline __m256d cmul(__m256d x, __m256d y) {
    __m256d yre = _mm256_movedup_pd(y);        // [yr0,yr0,yr1,yr1]
    __m256d yim = _mm256_permute_pd(y, 0xF);   // [yi0,yi0,yi1,yi1]
    __m256d xsw = _mm256_permute_pd(x, 0x5);   // [xi0,xr0,xi1,xr1]
    return _mm256_fmaddsub_pd(x, yre, _mm256_mul_pd(xsw, yim));
}

inline __m256d conj_lanes(__m256d x) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set_epi64x(
        0x8000000000000000LL, 0, 0x8000000000000000LL, 0));
    return _mm256_xor_pd(x, mask);
}

} // namespace

void axpy_avx2(cxd a, const cxd* x, cxd* y, std::size_t n) {
    const double* xd = reinterpret_cast<const double*>(x);
    double* yd = reinterpret_cast<double*>(y);
    const __m256d are = _mm256_set1_pd(a.real());
    const __m256d aim = _mm256_set1_pd(a.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        __m256d xsw = _mm256_permute_pd(xv, 0x5);
        __m256d t = _mm256_fmaddsub_pd(xv, are, _mm256_mul_pd(xsw, aim));
        __m256d yv = _mm256_add_pd(_mm256_loadu_pd(yd + 2 * i), t);
        _mm256_storeu_pd(yd + 2 * i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_rc_avx2(cxd a, const double* x, cxd* y, std::size_t n) {
    double* yd = reinterpret_cast<double*>(y);
    const __m256d av = _mm256_setr_pd(a.real(), a.imag(), a.real(), a.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m128d xv = _mm_loadu_pd(x + i);
        __m256d xdup = _mm256_permute4x64_pd(_mm256_castpd128_pd256(xv), 0x50);
        __m256d yv = _mm256_fmadd_pd(xdup, av, _mm256_loadu_pd(yd + 2 * i));
        _mm256_storeu_pd(yd + 2 * i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_real_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                     _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scal_avx2(cxd a, cxd* x, std::size_t n) {
    double* xd = reinterpret_cast<double*>(x);
    const __m256d are = _mm256_set1_pd(a.real());
    const __m256d aim = _mm256_set1_pd(a.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        __m256d xsw = _mm256_permute_pd(xv, 0x5);
        __m256d t = _mm256_fmaddsub_pd(xv, are, _mm256_mul_pd(xsw, aim));
        _mm256_storeu_pd(xd + 2 * i, t);
    }
    for (; i < n; ++i) x[i] *= a;
}

void vmul_avx2(const cxd* x, const cxd* y, cxd* z, std::size_t n) {
    const double* xd = reinterpret_cast<const double*>(x);
    const double* yd = reinterpret_cast<const double*>(y);
    double* zd = reinterpret_cast<double*>(z);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d t = cmul(_mm256_loadu_pd(xd + 2 * i), _mm256_loadu_pd(yd + 2 * i));
        _mm256_storeu_pd(zd + 2 * i, t);
    }
    for (; i < n; ++i) z[i] = x[i] * y[i];
}

void vmul_conj_avx2(const cxd* x, const cxd* y, cxd* z, std::size_t n) {
    const double* xd = reinterpret_cast<const double*>(x);
    const double* yd = reinterpret_cast<const double*>(y);
    double* zd = reinterpret_cast<double*>(z);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = conj_lanes(_mm256_loadu_pd(xd + 2 * i));
        __m256d t = cmul(xv, _mm256_loadu_pd(yd + 2 * i));
        _mm256_storeu_pd(zd + 2 * i, t);
    }
    for (; i < n; ++i) z[i] = std::conj(x[i]) * y[i];
}

cxd dotc_avx2(const cxd* x, const cxd* y, std::size_t n) {
    const double* xd = reinterpret_cast<const double*>(x);
    const double* yd = reinterpret_cast<const double*>(y);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = conj_lanes(_mm256_loadu_pd(xd + 2 * i));
        acc = _mm256_add_pd(acc, cmul(xv, _mm256_loadu_pd(yd + 2 * i)));
    }
    alignas(32) double buf[4];
    _mm256_store_pd(buf, acc);
    cxd out{buf[0] + buf[2], buf[1] + buf[3]};
    for (; i < n; ++i) out += std::conj(x[i]) * y[i];
    return out;
}

double norm_sq_avx2(const cxd* x, std::size_t n) {
    const double* xd = reinterpret_cast<const double*>(x);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        acc = _mm256_fmadd_pd(xv, xv, acc);
    }
    alignas(32) double buf[4];
    _mm256_store_pd(buf, acc);
    double out = buf[0] + buf[1] + buf[2] + buf[3];
    for (; i < n; ++i)
        out += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    return out;
}

} // namespace qrsim::kernels::detail

#endif // x86_64
