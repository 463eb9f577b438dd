#include <cmath>

#include "twlab/simd.hpp"

// Reference kernels.  The 4-accumulator blocking mirrors the 4-lane vector
// paths exactly: lane = i mod 4, lanes combined as (a0+a1)+(a2+a3).

namespace twlab::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot3(const double* a, const double* b, const double* c, std::size_t n) {
  double acc[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * b[i] * c[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void axpy(double s, const double* a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += s * a[i];
}

void kernel_row(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                const double* y0, const double* y1, double* out, std::size_t n,
                bool plateau) {
  const bool tr = k.transposed;
  switch (k.family) {
    case KernelFamily::zero:
      for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
      return;
    case KernelFamily::hilbert: {
      const double sgn = tr ? -1.0 : 1.0;  // K(y,x) = -K(x,y)
      if (plateau) {
        for (std::size_t i = 0; i < n; ++i) out[i] = sgn / (y0[i] - x[0]);
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          const double d = y0[i] - x[0];
          const double r = std::abs(d);
          out[i] = (r <= t.delta || r >= 2.0 * t.R) ? 0.0 : t.eta(r) * sgn / d;
        }
      }
      return;
    }
    case KernelFamily::riesz: {
      const double sgn = tr ? -1.0 : 1.0;
      const double p = k.dim + 1 - k.alpha;
      for (std::size_t i = 0; i < n; ++i) {
        const double r0 = y0[i] - x[0];
        const double r1 = k.dim == 2 ? y1[i] - x[1] : 0.0;
        const double r2 = r0 * r0 + r1 * r1;
        const double r = std::sqrt(r2);
        const double num = k.riesz_component == 0 ? r0 : r1;
        // canonical arithmetic forms, shared with the vector path
        const double val = p == 3.0   ? num / (r2 * r)
                           : p == 2.0 ? num / r2
                                      : num / std::pow(r, p);
        if (plateau) {
          out[i] = sgn * val;
        } else {
          out[i] = (r <= t.delta || r >= 2.0 * t.R) ? 0.0 : t.eta(r) * sgn * val;
        }
      }
      return;
    }
    case KernelFamily::fractional: {
      const double p = k.alpha - k.dim;
      for (std::size_t i = 0; i < n; ++i) {
        const double r0 = y0[i] - x[0];
        const double r1 = k.dim == 2 ? y1[i] - x[1] : 0.0;
        const double r2 = r0 * r0 + r1 * r1;
        const double r = std::sqrt(r2);
        const double val = p == -1.0   ? 1.0 / r
                           : p == -2.0 ? 1.0 / r2
                                       : std::pow(r, p);
        if (plateau) {
          out[i] = val;
        } else {
          out[i] = (r <= t.delta || r >= 2.0 * t.R) ? 0.0 : t.eta(r) * val;
        }
      }
      return;
    }
  }
}

}  // namespace twlab::simd::scalar
