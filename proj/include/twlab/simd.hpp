#pragma once

#include <cstddef>

#include "twlab/kernel.hpp"

namespace twlab::simd {

enum class Isa { scalar, avx2 };

// Runtime-selected instruction set.  Defaults to the best the CPU supports;
// the environment variable TW_LAB_SIMD (scalar|avx2|auto) or force() override
// it.  Both paths accumulate in the same 4-lane blocked order, so results
// agree bit for bit.
Isa active();
void force(Isa isa);
void reset_to_auto();
const char* isa_name(Isa isa);
bool avx2_supported();

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);
// sum_i a[i] * b[i] * c[i]
double dot3(const double* a, const double* b, const double* c, std::size_t n);
// out[i] += s * a[i]
void axpy(double s, const double* a, double* out, std::size_t n);

// Batched truncated-kernel evaluation against one target point:
//   out[i] = eta(|x - y_i|) * K(x, y_i)
// `plateau` asserts every |x - y_i| lies in [2 delta, R], where eta == 1 and
// the evaluation is pure arithmetic (the vectorized fast path).
void kernel_row(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                const double* y0, const double* y1, double* out, std::size_t n,
                bool plateau);

// Reference implementations (always available; the dispatch targets).
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
void axpy(double s, const double* a, double* out, std::size_t n);
void kernel_row(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                const double* y0, const double* y1, double* out, std::size_t n,
                bool plateau);
}  // namespace scalar

#if defined(__x86_64__)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
void axpy(double s, const double* a, double* out, std::size_t n);
void kernel_row(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                const double* y0, const double* y1, double* out, std::size_t n,
                bool plateau);
}  // namespace avx2
#endif

}  // namespace twlab::simd
