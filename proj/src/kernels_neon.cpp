// NEON variants (aarch64). Two float64x2 registers give the same four
// accumulators as the scalar reference: reg01 lanes {0,1}, reg23 lanes {2,3}.

#include <cmath>
#include <cstddef>

#if defined(__aarch64__)
#define URET_ARM64 1
#include <arm_neon.h>
#else
#define URET_ARM64 0
#endif

namespace uret::kernels::detail {

#if URET_ARM64

bool neon_supported() { return true; }

double dot_f64_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t a01 = vdupq_n_f64(0.0), a23 = vdupq_n_f64(0.0);
    std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        a01 = vfmaq_f64(a01, vld1q_f64(x + i), vld1q_f64(y + i));
        a23 = vfmaq_f64(a23, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double a[4] = {vgetq_lane_f64(a01, 0), vgetq_lane_f64(a01, 1),
                   vgetq_lane_f64(a23, 0), vgetq_lane_f64(a23, 1)};
    for (std::size_t i = n4; i < n; ++i) a[i & 3] = std::fma(x[i], y[i], a[i & 3]);
    return (a[0] + a[1]) + (a[2] + a[3]);
}

double dot_f32_neon(const float* x, const float* y, std::size_t n) {
    float64x2_t a01 = vdupq_n_f64(0.0), a23 = vdupq_n_f64(0.0);
    std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        float32x4_t xv = vld1q_f32(x + i);
        float32x4_t yv = vld1q_f32(y + i);
        a01 = vfmaq_f64(a01, vcvt_f64_f32(vget_low_f32(xv)),
                        vcvt_f64_f32(vget_low_f32(yv)));
        a23 = vfmaq_f64(a23, vcvt_f64_f32(vget_high_f32(xv)),
                        vcvt_f64_f32(vget_high_f32(yv)));
    }
    double a[4] = {vgetq_lane_f64(a01, 0), vgetq_lane_f64(a01, 1),
                   vgetq_lane_f64(a23, 0), vgetq_lane_f64(a23, 1)};
    for (std::size_t i = n4; i < n; ++i)
        a[i & 3] = std::fma(static_cast<double>(x[i]), static_cast<double>(y[i]),
                            a[i & 3]);
    return (a[0] + a[1]) + (a[2] + a[3]);
}

void axpy_f64_neon(double a, const double* x, double* y, std::size_t n) {
    float64x2_t av = vdupq_n_f64(a);
    std::size_t n2 = n & ~static_cast<std::size_t>(1);
    for (std::size_t i = 0; i < n2; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    }
    if (n2 < n) y[n2] = std::fma(a, x[n2], y[n2]);
}

#else

bool neon_supported() { return false; }
double dot_f64_neon(const double*, const double*, std::size_t) { return 0.0; }
double dot_f32_neon(const float*, const float*, std::size_t) { return 0.0; }
void axpy_f64_neon(double, const double*, double*, std::size_t) {}

#endif

}  // namespace uret::kernels::detail
