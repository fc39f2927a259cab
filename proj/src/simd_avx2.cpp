// AVX2+FMA backend. This translation unit is the only one built with
// -mavx2 -mfma; callers reach it through the dispatch table so the rest
// of the binary stays runnable on baseline x86-64.

#include "rkhsid/simd.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace rkhsid::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double weighted_dot_avx2(const double* w, const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), ab, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * a[i] * b[i];
    return s;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d, d, acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double l1_distance_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void convolve_avx2(const double* u, std::size_t nu, const double* k, std::size_t nk,
                   double* y) {
    // ramp-up region: not all taps have samples yet
    const std::size_t ramp = std::min(nu, nk - 1);
    for (std::size_t t = 0; t < ramp; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j <= t; ++j) s += k[j] * u[t - j];
        y[t] = s;
    }
    // steady state, 4 outputs per iteration
    std::size_t t = ramp;
    for (; t + 4 <= nu; t += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < nk; ++j) {
            const __m256d kj = _mm256_set1_pd(k[j]);
            acc = _mm256_fmadd_pd(kj, _mm256_loadu_pd(u + t - j), acc);
        }
        _mm256_storeu_pd(y + t, acc);
    }
    for (; t < nu; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < nk; ++j) s += k[j] * u[t - j];
        y[t] = s;
    }
}

}  // namespace

const Ops* avx2_ops() {
    static const Ops ops{"avx2",          dot_avx2,          weighted_dot_avx2,
                         squared_distance_avx2, l1_distance_avx2, convolve_avx2};
    return &ops;
}

}  // namespace rkhsid::simd

#else

namespace rkhsid::simd {
const Ops* avx2_ops() { return nullptr; }
}  // namespace rkhsid::simd

#endif
