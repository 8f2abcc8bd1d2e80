#include "ltgs/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define LTGS_HAVE_AVX2_BUILD 1
#endif

namespace ltgs::kernels {

namespace scalar {

double sum_sq_diff(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc;
}

double sum_abs_diff(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(double(a[i]) - double(b[i]));
    return acc;
}

double dot(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += double(a[i]) * double(b[i]);
    return acc;
}

void axpy(float* y, const float* x, float a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace scalar

#ifdef LTGS_HAVE_AVX2_BUILD
namespace avx2 {

// Accumulates in 4 double lanes; the tail falls back to scalar.
__attribute__((target("avx2,fma"))) static double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

__attribute__((target("avx2,fma"))) double sum_sq_diff(const float* a, const float* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        __m256d d = _mm256_sub_pd(va, vb);
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double r = hsum4(acc);
    for (; i < n; ++i) {
        double d = double(a[i]) - double(b[i]);
        r += d * d;
    }
    return r;
}

__attribute__((target("avx2,fma"))) double sum_abs_diff(const float* a, const float* b, std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(signmask, _mm256_sub_pd(va, vb)));
    }
    double r = hsum4(acc);
    for (; i < n; ++i) r += std::abs(double(a[i]) - double(b[i]));
    return r;
}

__attribute__((target("avx2,fma"))) double dot(const float* a, const float* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        acc = _mm256_fmadd_pd(va, vb, acc);
    }
    double r = hsum4(acc);
    for (; i < n; ++i) r += double(a[i]) * double(b[i]);
    return r;
}

__attribute__((target("avx2"))) void axpy(float* y, const float* x, float a, std::size_t n) {
    __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        __m256 vx = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(y + i, _mm256_add_ps(vy, _mm256_mul_ps(va, vx)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

}  // namespace avx2
#endif

static Dispatch make_dispatch() {
#ifdef LTGS_HAVE_AVX2_BUILD
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return {avx2::sum_sq_diff, avx2::sum_abs_diff, avx2::dot, avx2::axpy, "avx2"};
    }
#endif
    return {scalar::sum_sq_diff, scalar::sum_abs_diff, scalar::dot, scalar::axpy, "scalar"};
}

const Dispatch& active() {
    static const Dispatch d = make_dispatch();
    return d;
}

}  // namespace ltgs::kernels
