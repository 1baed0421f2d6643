#pragma once
// Arithmetic inner loops shared by the encoder and the vector index.
//
// Every kernel has a scalar reference and, where the hardware supports it,
// a SIMD variant (AVX2+FMA on x86-64, NEON on aarch64). The variant to use
// is picked once at startup; the env var URET_KERNELS=scalar|avx2|neon
// overrides the choice.
//
// Dot products are bit-exact across backends. The summation order is fixed:
// four independent accumulators, element i goes to accumulator i mod 4 via
// fused multiply-add, combined at the end as (a0+a1)+(a2+a3). f32 inputs are
// widened to f64 before multiplication. This order is part of the on-disk
// score contract of the dense index, not an implementation detail.

#include <cstddef>
#include <string>

namespace uret::kernels {

enum class Backend { scalar, avx2, neon };

// Currently active backend.
Backend active();
std::string backend_name(Backend b);

// Force a backend (throws if unsupported on this machine). Used by tests.
void force(Backend b);
// Re-run auto-detection (honours URET_KERNELS).
void autodetect();

// Inner product, f64 accumulation, fixed 4-lane summation tree.
double dot_f64(const double* x, const double* y, std::size_t n);
double dot_f32(const float* x, const float* y, std::size_t n);

// y[i] += a * x[i]   (elementwise, exact across backends trivially)
void axpy_f64(double a, const double* x, double* y, std::size_t n);

// Reference implementations, always scalar, for equivalence tests.
namespace ref {
double dot_f64(const double* x, const double* y, std::size_t n);
double dot_f32(const float* x, const float* y, std::size_t n);
void axpy_f64(double a, const double* x, double* y, std::size_t n);
}  // namespace ref

}  // namespace uret::kernels
