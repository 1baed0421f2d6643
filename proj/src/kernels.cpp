#include "uret/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace uret::kernels {

namespace ref {

double dot_f64(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        acc[i & 3] = std::fma(x[i], y[i], acc[i & 3]);
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot_f32(const float* x, const float* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        acc[i & 3] = std::fma(static_cast<double>(x[i]),
                              static_cast<double>(y[i]), acc[i & 3]);
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

}  // namespace ref

namespace detail {
bool avx2_supported();
double dot_f64_avx2(const double*, const double*, std::size_t);
double dot_f32_avx2(const float*, const float*, std::size_t);
void axpy_f64_avx2(double, const double*, double*, std::size_t);
bool neon_supported();
double dot_f64_neon(const double*, const double*, std::size_t);
double dot_f32_neon(const float*, const float*, std::size_t);
void axpy_f64_neon(double, const double*, double*, std::size_t);
}  // namespace detail

namespace {

struct Vtable {
    Backend backend;
    double (*dot_f64)(const double*, const double*, std::size_t);
    double (*dot_f32)(const float*, const float*, std::size_t);
    void (*axpy_f64)(double, const double*, double*, std::size_t);
};

Vtable make_vtable(Backend b) {
    switch (b) {
        case Backend::avx2:
            if (!detail::avx2_supported())
                throw std::runtime_error("kernels: avx2 not supported on this cpu");
            return {Backend::avx2, detail::dot_f64_avx2, detail::dot_f32_avx2,
                    detail::axpy_f64_avx2};
        case Backend::neon:
            if (!detail::neon_supported())
                throw std::runtime_error("kernels: neon not supported on this cpu");
            return {Backend::neon, detail::dot_f64_neon, detail::dot_f32_neon,
                    detail::axpy_f64_neon};
        case Backend::scalar:
        default:
            return {Backend::scalar, ref::dot_f64, ref::dot_f32, ref::axpy_f64};
    }
}

Backend detect() {
    if (const char* env = std::getenv("URET_KERNELS")) {
        std::string v = env;
        if (v == "scalar") return Backend::scalar;
        if (v == "avx2") return Backend::avx2;
        if (v == "neon") return Backend::neon;
    }
    if (detail::avx2_supported()) return Backend::avx2;
    if (detail::neon_supported()) return Backend::neon;
    return Backend::scalar;
}

Vtable& vtable() {
    static Vtable vt = make_vtable(detect());
    return vt;
}

}  // namespace

Backend active() { return vtable().backend; }

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

void force(Backend b) { vtable() = make_vtable(b); }

void autodetect() { vtable() = make_vtable(detect()); }

double dot_f64(const double* x, const double* y, std::size_t n) {
    return vtable().dot_f64(x, y, n);
}
double dot_f32(const float* x, const float* y, std::size_t n) {
    return vtable().dot_f32(x, y, n);
}
void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    vtable().axpy_f64(a, x, y, n);
}

}  // namespace uret::kernels
