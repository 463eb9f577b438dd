#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>

#include "twlab/simd.hpp"

// AVX2 variants.  Lane i of a 4-wide block is element 4k + i, matching the
// scalar reference's acc[i & 3] blocking; tails run the same scalar code into
// the extracted lane accumulators, so scalar and vector results are
// bit-identical (division and sqrt are IEEE-exact, and the build disables
// FMA contraction).

namespace twlab::simd::avx2 {

namespace {

inline double reduce_lanes(__m256d acc, const double* a, const double* b,
                           std::size_t tail_start, std::size_t n,
                           const double* c = nullptr) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (std::size_t i = tail_start; i < n; ++i)
    lanes[i & 3] += c ? a[i] * b[i] * c[i] : a[i] * b[i];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t m = n & ~std::size_t{3};
  for (std::size_t i = 0; i < m; i += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  return reduce_lanes(acc, a, b, m, n);
}

double dot3(const double* a, const double* b, const double* c, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t m = n & ~std::size_t{3};
  for (std::size_t i = 0; i < m; i += 4) {
    const __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(ab, _mm256_loadu_pd(c + i)));
  }
  return reduce_lanes(acc, a, b, m, n, c);
}

void axpy(double s, const double* a, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  const std::size_t m = n & ~std::size_t{3};
  for (std::size_t i = 0; i < m; i += 4) {
    const __m256d v =
        _mm256_add_pd(_mm256_loadu_pd(out + i), _mm256_mul_pd(vs, _mm256_loadu_pd(a + i)));
    _mm256_storeu_pd(out + i, v);
  }
  for (std::size_t i = m; i < n; ++i) out[i] += s * a[i];
}

void kernel_row(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                const double* y0, const double* y1, double* out, std::size_t n,
                bool plateau) {
  // Vectorize only the pure-arithmetic plateau cases; everything else takes
  // the scalar reference path (identical output by construction).
  const double p_riesz = k.dim + 1 - k.alpha;
  const double p_frac = k.alpha - k.dim;
  const bool vectorizable =
      plateau && (k.family == KernelFamily::hilbert ||
                  (k.family == KernelFamily::riesz && (p_riesz == 3.0 || p_riesz == 2.0)) ||
                  (k.family == KernelFamily::fractional && (p_frac == -1.0 || p_frac == -2.0)));
  if (!vectorizable) {
    scalar::kernel_row(k, t, x, y0, y1, out, n, plateau);
    return;
  }

  const std::size_t m = n & ~std::size_t{3};
  const __m256d x0 = _mm256_set1_pd(x[0]);
  const __m256d x1 = _mm256_set1_pd(x[1]);

  switch (k.family) {
    case KernelFamily::hilbert: {
      const __m256d sgn = _mm256_set1_pd(k.transposed ? -1.0 : 1.0);
      for (std::size_t i = 0; i < m; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(y0 + i), x0);
        _mm256_storeu_pd(out + i, _mm256_div_pd(sgn, d));
      }
      break;
    }
    case KernelFamily::riesz: {
      const __m256d sgn = _mm256_set1_pd(k.transposed ? -1.0 : 1.0);
      for (std::size_t i = 0; i < m; i += 4) {
        const __m256d r0 = _mm256_sub_pd(_mm256_loadu_pd(y0 + i), x0);
        const __m256d r1 = k.dim == 2 ? _mm256_sub_pd(_mm256_loadu_pd(y1 + i), x1)
                                      : _mm256_setzero_pd();
        const __m256d r2 = _mm256_add_pd(_mm256_mul_pd(r0, r0), _mm256_mul_pd(r1, r1));
        const __m256d num = k.riesz_component == 0 ? r0 : r1;
        __m256d val;
        if (p_riesz == 3.0) {
          const __m256d r = _mm256_sqrt_pd(r2);
          val = _mm256_div_pd(num, _mm256_mul_pd(r2, r));
        } else {
          val = _mm256_div_pd(num, r2);
        }
        _mm256_storeu_pd(out + i, _mm256_mul_pd(sgn, val));
      }
      break;
    }
    case KernelFamily::fractional: {
      for (std::size_t i = 0; i < m; i += 4) {
        const __m256d r0 = _mm256_sub_pd(_mm256_loadu_pd(y0 + i), x0);
        const __m256d r1 = k.dim == 2 ? _mm256_sub_pd(_mm256_loadu_pd(y1 + i), x1)
                                      : _mm256_setzero_pd();
        const __m256d r2 = _mm256_add_pd(_mm256_mul_pd(r0, r0), _mm256_mul_pd(r1, r1));
        const __m256d one = _mm256_set1_pd(1.0);
        const __m256d val = p_frac == -1.0 ? _mm256_div_pd(one, _mm256_sqrt_pd(r2))
                                           : _mm256_div_pd(one, r2);
        _mm256_storeu_pd(out + i, val);
      }
      break;
    }
    default:
      break;
  }
  if (m < n) scalar::kernel_row(k, t, x, y0 + m, y1 + m, out + m, n - m, plateau);
}

}  // namespace twlab::simd::avx2

#endif  // __x86_64__
