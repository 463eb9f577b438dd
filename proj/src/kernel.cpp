#include "twlab/kernel.hpp"

#include <cmath>

namespace twlab {

const char* family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::zero: return "zero";
    case KernelFamily::hilbert: return "hilbert";
    case KernelFamily::riesz: return "riesz";
    case KernelFamily::fractional: return "fractional";
  }
  return "?";
}

KernelFamily family_from_name(const std::string& s) {
  if (s == "zero") return KernelFamily::zero;
  if (s == "hilbert") return KernelFamily::hilbert;
  if (s == "riesz" || s == "riesz_0" || s == "riesz_1") return KernelFamily::riesz;
  if (s == "fractional") return KernelFamily::fractional;
  throw config_error("unknown kernel family: " + s);
}

KernelSpec KernelSpec::make(KernelFamily f, int n, double alpha, int component) {
  KernelSpec k;
  k.family = f;
  k.dim = n;
  k.alpha = alpha;
  k.riesz_component = component;
  if (!(alpha >= 0.0 && alpha < n)) throw config_error("kernel: alpha must lie in [0, n)");
  switch (f) {
    case KernelFamily::zero:
      k.c_cz = 0.0;
      k.elliptic = false;
      break;
    case KernelFamily::hilbert: {
      if (n != 1) throw config_error("kernel: hilbert family requires n = 1");
      if (alpha != 0.0) throw config_error("kernel: hilbert family requires alpha = 0");
      // d^j/dx^j 1/(y-x) = j!/(y-x)^(j+1), so the order-j ratio is exactly j!.
      double b = 1.0;
      for (int j = 1; j <= k.smoothness; ++j) b *= j;
      k.c_cz = b;
      k.u0 = {1.0, 0.0};
      break;
    }
    case KernelFamily::riesz: {
      if (component < 0 || component >= n) throw config_error("kernel: bad riesz component");
      const double p = n + 1 - alpha;
      double b = 1.0, fac = 1.0;
      for (int j = 1; j <= k.smoothness; ++j) {
        fac *= (p + 2 * j) * 2.0;  // loose closed-form envelope for |grad^j|
        b = std::max(b, fac);
      }
      k.c_cz = b;
      k.u0 = {0.0, 0.0};
      k.u0[component] = 1.0;
      break;
    }
    case KernelFamily::fractional: {
      const double p = n - alpha;
      double b = 1.0, fac = 1.0;
      for (int j = 1; j <= k.smoothness; ++j) {
        fac *= (p + 2 * j) * 2.0;
        b = std::max(b, fac);
      }
      k.c_cz = b;
      k.u0 = {1.0, 0.0};
      break;
    }
  }
  return k;
}

KernelSpec KernelSpec::adjoint() const {
  KernelSpec k = *this;
  k.transposed = !k.transposed;
  return k;
}

double KernelSpec::eval(const Point& xx, const Point& yy) const {
  const Point& x = transposed ? yy : xx;
  const Point& y = transposed ? xx : yy;
  switch (family) {
    case KernelFamily::zero: return 0.0;
    case KernelFamily::hilbert: return 1.0 / (y[0] - x[0]);
    case KernelFamily::riesz: {
      const double r0 = y[0] - x[0];
      const double r1 = dim == 2 ? y[1] - x[1] : 0.0;
      const double r = std::sqrt(r0 * r0 + r1 * r1);
      const double num = riesz_component == 0 ? r0 : r1;
      return num / std::pow(r, dim + 1 - alpha);
    }
    case KernelFamily::fractional: {
      const double r0 = y[0] - x[0];
      const double r1 = dim == 2 ? y[1] - x[1] : 0.0;
      const double r = std::sqrt(r0 * r0 + r1 * r1);
      return std::pow(r, alpha - dim);
    }
  }
  return 0.0;
}

double smoothstep(int order, double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  // Generalized smoothstep: u^(N+1) sum_k binom(N+k,k) binom(2N+1,N-k) (-u)^k.
  const int N = order;
  double acc = 0.0;
  double upow = 1.0;
  const auto binom = [](int a, int b) {
    double r = 1.0;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  for (int k = 0; k <= N; ++k) {
    acc += binom(N + k, k) * binom(2 * N + 1, N - k) * upow;
    upow *= -u;
  }
  for (int i = 0; i <= N; ++i) acc *= u;
  return acc;
}

double TruncationSpec::eta(double t) const {
  if (t <= delta) return 0.0;
  if (t >= 2.0 * R) return 0.0;
  const double rise = smoothstep(smooth_order, (t - delta) / delta);
  const double fall = 1.0 - smoothstep(smooth_order, (t - R) / R);
  return rise * fall;
}

TruncationSpec TruncationSpec::for_grid(const Grid& g, int kappa, double delta_factor,
                                        double R_factor) {
  TruncationSpec t;
  t.delta = delta_factor * g.leaf_diameter();
  t.R = R_factor * g.root_diameter();
  t.smooth_order = kappa + 1;
  return t;
}

double eval_truncated(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                      const Point& y) {
  const double r = norm_euclid({y[0] - x[0], y[1] - x[1]}, k.dim);
  if (r <= t.delta || r >= 2.0 * t.R) return 0.0;
  return t.eta(r) * k.eval(x, y);
}

namespace {

// Central finite difference of order j in the x variable along a multi-index
// direction pattern; we take the max over axis-aligned multi-indices.
double fd_partial(const KernelSpec& k, const TruncationSpec& t, Point x, const Point& y,
                  int ax0, int ax1, double h) {
  const int j = ax0 + ax1;
  if (j == 0) return eval_truncated(k, t, x, y);
  // reduce one order along the first available axis
  int axis = ax0 > 0 ? 0 : 1;
  Point xp = x, xm = x;
  xp[axis] += h;
  xm[axis] -= h;
  const int n0 = axis == 0 ? ax0 - 1 : ax0;
  const int n1 = axis == 0 ? ax1 : ax1 - 1;
  return (fd_partial(k, t, xp, y, n0, n1, h) - fd_partial(k, t, xm, y, n0, n1, h)) / (2 * h);
}

}  // namespace

CzReport verify_cz(const KernelSpec& k, const TruncationSpec& t,
                   const std::vector<std::pair<Point, Point>>& pairs, int j_max) {
  CzReport rep;
  rep.max_ratio.assign(j_max + 1, 0.0);
  for (const auto& [x, y] : pairs) {
    const double r = norm_euclid({y[0] - x[0], y[1] - x[1]}, k.dim);
    if (r < 2.0 * t.delta) {
      ++rep.skipped;
      continue;
    }
    ++rep.used;
    for (int j = 0; j <= j_max; ++j) {
      const double h = r * std::pow(1e-16, 1.0 / (j + 3));
      double best = 0.0;
      for (int a0 = 0; a0 <= j; ++a0) {
        const int a1 = j - a0;
        if (k.dim == 1 && a1 > 0) continue;
        best = std::max(best, std::abs(fd_partial(k, t, x, y, a0, a1, h)));
      }
      rep.max_ratio[j] =
          std::max(rep.max_ratio[j], best * std::pow(r, k.dim + j - k.alpha));
    }
  }
  return rep;
}

double ellipticity_constant(const KernelSpec& k, const TruncationSpec& t, double t_lo,
                            double t_hi, int samples) {
  double c = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double s = t_lo * std::pow(t_hi / t_lo, (i + 0.5) / samples);
    for (double sg : {-1.0, 1.0}) {
      const double tt = sg * s;
      const Point x{0.0, 0.0};
      const Point y{tt * k.u0[0], tt * k.u0[1]};
      const double r = norm_euclid(y, k.dim);
      if (r < 2 * t.delta || r > t.R) continue;
      c = std::min(c, std::abs(k.eval(x, y)) * std::pow(std::abs(tt), k.dim - k.alpha));
    }
  }
  return std::isfinite(c) ? c : 0.0;
}

}  // namespace twlab
