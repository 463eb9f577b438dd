#include "twlab/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace twlab::simd {

namespace {

Isa detect() {
#if defined(__x86_64__)
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa from_env() {
  const char* e = std::getenv("TW_LAB_SIMD");
  if (e != nullptr) {
    if (std::strcmp(e, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(e, "avx2") == 0) return Isa::avx2;
  }
  return detect();
}

Isa g_active = from_env();

}  // namespace

Isa active() { return g_active; }
void force(Isa isa) { g_active = isa; }
void reset_to_auto() { g_active = from_env(); }
bool avx2_supported() { return detect() == Isa::avx2; }

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) {
#if defined(__x86_64__)
  if (g_active == Isa::avx2) return avx2::dot(a, b, n);
#endif
  return scalar::dot(a, b, n);
}

double dot3(const double* a, const double* b, const double* c, std::size_t n) {
#if defined(__x86_64__)
  if (g_active == Isa::avx2) return avx2::dot3(a, b, c, n);
#endif
  return scalar::dot3(a, b, c, n);
}

void axpy(double s, const double* a, double* out, std::size_t n) {
#if defined(__x86_64__)
  if (g_active == Isa::avx2) return avx2::axpy(s, a, out, n);
#endif
  return scalar::axpy(s, a, out, n);
}

void kernel_row(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                const double* y0, const double* y1, double* out, std::size_t n,
                bool plateau) {
#if defined(__x86_64__)
  if (g_active == Isa::avx2) return avx2::kernel_row(k, t, x, y0, y1, out, n, plateau);
#endif
  return scalar::kernel_row(k, t, x, y0, y1, out, n, plateau);
}

}  // namespace twlab::simd
