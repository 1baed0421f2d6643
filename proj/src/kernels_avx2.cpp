// AVX2+FMA variants. Same 4-accumulator summation tree as the scalar
// reference: vector lane j holds accumulator j, so results are bit-identical.

#include <cmath>
#include <cstddef>

#if defined(__x86_64__) || defined(_M_X64)
#define URET_X86 1
#include <immintrin.h>
#else
#define URET_X86 0
#endif

namespace uret::kernels::detail {

#if URET_X86

bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

__attribute__((target("avx2,fma")))
double dot_f64_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    alignas(32) double a[4];
    _mm256_store_pd(a, acc);
    for (std::size_t i = n4; i < n; ++i) a[i & 3] = std::fma(x[i], y[i], a[i & 3]);
    return (a[0] + a[1]) + (a[2] + a[3]);
}

__attribute__((target("avx2,fma")))
double dot_f32_avx2(const float* x, const float* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d xd = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        __m256d yd = _mm256_cvtps_pd(_mm_loadu_ps(y + i));
        acc = _mm256_fmadd_pd(xd, yd, acc);
    }
    alignas(32) double a[4];
    _mm256_store_pd(a, acc);
    for (std::size_t i = n4; i < n; ++i)
        a[i & 3] = std::fma(static_cast<double>(x[i]), static_cast<double>(y[i]),
                            a[i & 3]);
    return (a[0] + a[1]) + (a[2] + a[3]);
}

__attribute__((target("avx2,fma")))
void axpy_f64_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, yv);
    }
    for (std::size_t i = n4; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

#else

bool avx2_supported() { return false; }
double dot_f64_avx2(const double*, const double*, std::size_t) { return 0.0; }
double dot_f32_avx2(const float*, const float*, std::size_t) { return 0.0; }
void axpy_f64_avx2(double, const double*, double*, std::size_t) {}

#endif

}  // namespace uret::kernels::detail
