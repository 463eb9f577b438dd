#include "twlab/poly.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>

namespace twlab {

const std::vector<MIndex>& monomials_below(int n, int kap) {
  static std::mutex mx;
  static std::map<std::pair<int, int>, std::vector<MIndex>> cache;
  std::lock_guard<std::mutex> lock(mx);
  auto& v = cache[{n, kap}];
  if (!v.empty() || kap <= 0) return v;
  for (int g = 0; g < kap; ++g) {
    if (n == 1) {
      v.push_back(MIndex{{g, 0}});
    } else {
      for (int b0 = 0; b0 <= g; ++b0) v.push_back(MIndex{{b0, g - b0}});
    }
  }
  return v;
}

int mcount(int n, int kap) {
  if (kap <= 0) return 0;
  return n == 1 ? kap : kap * (kap + 1) / 2;
}

double unit_moment_1d(int p) {
  if (p & 1) return 0.0;
  return std::ldexp(1.0, -p) / (p + 1);
}

double unit_moment(int n, const MIndex& p) {
  double v = unit_moment_1d(p.b[0]);
  if (n == 2) v *= unit_moment_1d(p.b[1]);
  return v;
}

namespace {

// Per-axis substitution (d + s t)^g = sum_j binom(g,j) s^j d^(g-j) t^j.
void axis_factors(double s, double d, int kap, std::vector<double>& A) {
  A.assign(static_cast<std::size_t>(kap) * kap, 0.0);
  std::vector<double> binom(static_cast<std::size_t>(kap) * kap, 0.0);
  for (int g = 0; g < kap; ++g) {
    binom[g * kap] = 1.0;
    for (int j = 1; j <= g; ++j)
      binom[g * kap + j] =
          binom[(g - 1) * kap + j - 1] + (j <= g - 1 ? binom[(g - 1) * kap + j] : 0.0);
  }
  for (int g = 0; g < kap; ++g) {
    double dp = 1.0;  // d^(g-j), built from the top power down
    std::vector<double> dpow(g + 1);
    for (int e = 0; e <= g; ++e) {
      dpow[e] = dp;
      dp *= d;
    }  // dpow[e] = d^e
    double sp = 1.0;
    for (int j = 0; j <= g; ++j) {
      A[g * kap + j] = binom[g * kap + j] * sp * dpow[g - j];
      sp *= s;
    }
  }
}

std::vector<double> reexpand_impl(int n, double s0, double d0, double s1, double d1, int kap) {
  const auto& mon = monomials_below(n, kap);
  const int B = mcount(n, kap);
  std::vector<double> R(static_cast<std::size_t>(B) * B, 0.0);
  std::vector<double> A0, A1;
  axis_factors(s0, d0, kap, A0);
  if (n == 2) axis_factors(s1, d1, kap, A1);
  for (int gi = 0; gi < B; ++gi) {
    const MIndex& g = mon[gi];
    for (int j0 = 0; j0 <= g.b[0]; ++j0) {
      const double f0 = A0[g.b[0] * kap + j0];
      if (n == 1) {
        R[static_cast<std::size_t>(gi) * B + mpos(1, j0, 0)] += f0;
        continue;
      }
      for (int j1 = 0; j1 <= g.b[1]; ++j1)
        R[static_cast<std::size_t>(gi) * B + mpos(2, j0, j1)] += f0 * A1[g.b[1] * kap + j1];
    }
  }
  return R;
}

}  // namespace

std::vector<double> reexpand_matrix(const Grid& g, const Cube& src, const Cube& dst, int kap) {
  const Box bs = g.box(src), bd = g.box(dst);
  return reexpand_matrix_boxes(g.dim(), bs, bd, kap);
}

std::vector<double> reexpand_matrix_boxes(int n, const Box& src, const Box& dst, int kap) {
  const Point cs = src.center(), cd = dst.center();
  const double s0 = dst.side(0) / src.side(0);
  const double d0 = (cd[0] - cs[0]) / src.side(0);
  double s1 = 1.0, d1 = 0.0;
  if (n == 2) {
    s1 = dst.side(1) / src.side(1);
    d1 = (cd[1] - cs[1]) / src.side(1);
  }
  return reexpand_impl(n, s0, d0, s1, d1, kap);
}

LeafPoly::LeafPoly(const Grid& g, int kap)
    : grid_(&g), kap_(kap), block_(mcount(g.dim(), kap)) {
  coef_.assign(static_cast<std::size_t>(g.leaf_count()) * block_, 0.0);
}

LeafPoly LeafPoly::from_leaf_values(const Grid& g, const std::vector<double>& v, int kap) {
  if (static_cast<std::int64_t>(v.size()) != g.leaf_count())
    throw config_error("leaf function has wrong length");
  LeafPoly p(g, kap);
  for (std::int64_t i = 0; i < g.leaf_count(); ++i) p.leaf(i)[0] = v[i];
  return p;
}

void LeafPoly::add_on_cube(const Cube& Q, const double* p, int pk, double scale) {
  if (pk > kap_) throw config_error("leafpoly: degree bound too small for added polynomial");
  const Grid& g = *grid_;
  const int n = g.dim();
  const int Bp = mcount(n, pk);
  g.for_each_leaf(Q, [&](std::int64_t id) {
    const auto R = reexpand_matrix(g, Q, g.leaf_from_id(id), pk);
    double* c = leaf(id);
    for (int gi = 0; gi < Bp; ++gi) {
      if (p[gi] == 0.0) continue;
      const double w = scale * p[gi];
      for (int bi = 0; bi < Bp; ++bi) c[bi] += w * R[static_cast<std::size_t>(gi) * Bp + bi];
    }
  });
}

void LeafPoly::add_scaled(const LeafPoly& other, double scale) {
  if (other.block_ > block_) throw config_error("leafpoly: incompatible degree bounds");
  for (std::int64_t i = 0; i < grid_->leaf_count(); ++i) {
    const double* src = other.leaf(i);
    double* dst = leaf(i);
    for (int b = 0; b < other.block_; ++b) dst[b] += scale * src[b];
  }
}

void LeafPoly::restrict_to(const Cube& Q) {
  const auto span = grid_->leaf_span(Q);
  for (std::int64_t i = 0; i < grid_->leaf_count(); ++i) {
    const Cube lf = grid_->leaf_from_id(i);
    bool inside = true;
    for (int k = 0; k < grid_->dim(); ++k)
      inside = inside && lf.idx[k] >= span.lo[k] && lf.idx[k] < span.hi[k];
    if (!inside) std::fill(leaf(i), leaf(i) + block_, 0.0);
  }
}

LeafPoly LeafPoly::restricted(const Cube& Q) const {
  LeafPoly out = *this;
  out.restrict_to(Q);
  return out;
}

LeafPoly LeafPoly::multiplied(const LeafPoly& other) const {
  const int n = grid_->dim();
  LeafPoly out(*grid_, kap_ + other.kap_ - 1);
  const auto& ma = monomials_below(n, kap_);
  const auto& mb = monomials_below(n, other.kap_);
  for (std::int64_t i = 0; i < grid_->leaf_count(); ++i) {
    const double* a = leaf(i);
    const double* b = other.leaf(i);
    double* c = out.leaf(i);
    for (int ai = 0; ai < block_; ++ai) {
      if (a[ai] == 0.0) continue;
      for (int bi = 0; bi < other.block_; ++bi) {
        if (b[bi] == 0.0) continue;
        c[mpos(n, ma[ai].b[0] + mb[bi].b[0], ma[ai].b[1] + mb[bi].b[1])] += a[ai] * b[bi];
      }
    }
  }
  return out;
}

double LeafPoly::value_on_leaf(std::int64_t id, const Point& x) const {
  const Grid& g = *grid_;
  const Box b = g.box(g.leaf_from_id(id));
  const Point c = b.center();
  const double t0 = (x[0] - c[0]) / b.side(0);
  const double t1 = g.dim() == 2 ? (x[1] - c[1]) / b.side(1) : 0.0;
  const auto& mon = monomials_below(g.dim(), kap_);
  const double* cf = leaf(id);
  double v = 0.0;
  for (int i = 0; i < block_; ++i)
    v += cf[i] * std::pow(t0, mon[i].b[0]) * (g.dim() == 2 ? std::pow(t1, mon[i].b[1]) : 1.0);
  return v;
}

double LeafPoly::value_at(const Point& x) const {
  const Grid& g = *grid_;
  const double h = g.leaf_side();
  Cube lf;
  lf.level = g.depth();
  for (int k = 0; k < g.dim(); ++k) {
    int i = static_cast<int>(std::floor((x[k] - g.origin()[k]) / h));
    i = std::clamp(i, 0, g.leaves_per_axis() - 1);
    lf.idx[k] = i;
  }
  return value_on_leaf(g.leaf_id(lf), x);
}

double LeafPoly::sampled_sup_on_leaf(std::int64_t id) const {
  const Grid& g = *grid_;
  const Box b = g.box(g.leaf_from_id(id));
  constexpr int S = 17;
  double sup = 0.0;
  if (g.dim() == 1) {
    for (int i = 0; i < S; ++i) {
      const double x = b.lo[0] + b.side(0) * i / (S - 1);
      sup = std::max(sup, std::abs(value_on_leaf(id, {x, 0.0})));
    }
    return sup;
  }
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) {
      const Point x{b.lo[0] + b.side(0) * i / (S - 1), b.lo[1] + b.side(1) * j / (S - 1)};
      sup = std::max(sup, std::abs(value_on_leaf(id, x)));
    }
  return sup;
}

double LeafPoly::inner(const LeafPoly& other, const Measure& mu) const {
  const Grid& g = *grid_;
  const int n = g.dim();
  const auto& ma = monomials_below(n, kap_);
  const auto& mb = monomials_below(n, other.kap_);
  // Precompute unit cross-moment table.
  std::vector<double> um(static_cast<std::size_t>(block_) * other.block_);
  for (int ai = 0; ai < block_; ++ai)
    for (int bi = 0; bi < other.block_; ++bi)
      um[static_cast<std::size_t>(ai) * other.block_ + bi] =
          unit_moment(n, MIndex{{ma[ai].b[0] + mb[bi].b[0], ma[ai].b[1] + mb[bi].b[1]}});
  const double vol = std::pow(g.leaf_side(), n);
  double acc = 0.0;
  for (std::int64_t i = 0; i < g.leaf_count(); ++i) {
    const double d = mu.density(i);
    if (d == 0.0) continue;
    const double* a = leaf(i);
    const double* b = other.leaf(i);
    double s = 0.0;
    for (int ai = 0; ai < block_; ++ai) {
      if (a[ai] == 0.0) continue;
      const double* row = um.data() + static_cast<std::size_t>(ai) * other.block_;
      double t = 0.0;
      for (int bi = 0; bi < other.block_; ++bi) t += row[bi] * b[bi];
      s += a[ai] * t;
    }
    acc += d * vol * s;
  }
  return acc;
}

namespace {

// The 2^n child-to-parent reexpansion matrices are translation invariant:
// scale 1/2, center offset +-1/4 per axis.
std::vector<std::vector<double>> child_to_parent(int n, int kap) {
  std::vector<std::vector<double>> out;
  for (int which = 0; which < (1 << n); ++which) {
    const double d0 = ((n == 1 ? which : (which >> 1)) & 1) ? 0.25 : -0.25;
    const double d1 = (which & 1) ? 0.25 : -0.25;
    out.push_back(n == 1 ? reexpand_impl(1, 0.5, d0, 1.0, 0.0, kap)
                         : reexpand_impl(2, 0.5, d0, 0.5, d1, kap));
  }
  return out;
}

}  // namespace

MomentTree::MomentTree(const Measure& mu, int kap)
    : kap_(kap), block_(mcount(mu.grid().dim(), kap)) {
  const Grid& g = mu.grid();
  const int n = g.dim();
  m_.assign(static_cast<std::size_t>(g.cube_count()) * block_, 0.0);
  const auto& mon = monomials_below(n, kap);
  const double vol = std::pow(g.leaf_side(), n);
  // Leaves.
  std::vector<double> umom(block_);
  for (int b = 0; b < block_; ++b) umom[b] = unit_moment(n, mon[b]);
  for (std::int64_t i = 0; i < g.leaf_count(); ++i) {
    double* dst = m_.data() + g.cube_id(g.leaf_from_id(i)) * block_;
    const double w = mu.density(i) * vol;
    for (int b = 0; b < block_; ++b) dst[b] = w * umom[b];
  }
  // Upward pass.
  const auto R = child_to_parent(n, kap);
  for (int l = g.depth() - 1; l >= 0; --l) {
    for (const Cube& c : g.level_cubes(l)) {
      double* dst = m_.data() + g.cube_id(c) * block_;
      for (int which = 0; which < (1 << n); ++which) {
        const double* src = m_.data() + g.cube_id(g.child(c, which)) * block_;
        const auto& Rm = R[which];
        for (int gi = 0; gi < block_; ++gi) {
          double acc = 0.0;
          const double* row = Rm.data() + static_cast<std::size_t>(gi) * block_;
          for (int bi = 0; bi < block_; ++bi) acc += row[bi] * src[bi];
          dst[gi] += acc;
        }
      }
    }
  }
}

WeightedMomentTree::WeightedMomentTree(const Measure& mu, const LeafPoly& f, int kap)
    : kap_(kap), block_(mcount(mu.grid().dim(), kap)) {
  const Grid& g = mu.grid();
  const int n = g.dim();
  m_.assign(static_cast<std::size_t>(g.cube_count()) * block_, 0.0);
  const auto& mon = monomials_below(n, kap);
  const auto& monf = monomials_below(n, f.kap());
  const double vol = std::pow(g.leaf_side(), n);
  std::vector<double> cross(static_cast<std::size_t>(f.block()) * block_);
  for (int ai = 0; ai < f.block(); ++ai)
    for (int bi = 0; bi < block_; ++bi)
      cross[static_cast<std::size_t>(ai) * block_ + bi] =
          unit_moment(n, MIndex{{monf[ai].b[0] + mon[bi].b[0], monf[ai].b[1] + mon[bi].b[1]}});
  for (std::int64_t i = 0; i < g.leaf_count(); ++i) {
    const double w = mu.density(i) * vol;
    if (w == 0.0) continue;
    double* dst = m_.data() + g.cube_id(g.leaf_from_id(i)) * block_;
    const double* a = f.leaf(i);
    for (int ai = 0; ai < f.block(); ++ai) {
      if (a[ai] == 0.0) continue;
      const double* row = cross.data() + static_cast<std::size_t>(ai) * block_;
      for (int bi = 0; bi < block_; ++bi) dst[bi] += w * a[ai] * row[bi];
    }
  }
  const auto R = child_to_parent(n, kap);
  for (int l = g.depth() - 1; l >= 0; --l) {
    for (const Cube& c : g.level_cubes(l)) {
      double* dst = m_.data() + g.cube_id(c) * block_;
      for (int which = 0; which < (1 << n); ++which) {
        const double* src = m_.data() + g.cube_id(g.child(c, which)) * block_;
        const auto& Rm = R[which];
        for (int gi = 0; gi < block_; ++gi) {
          double acc = 0.0;
          const double* row = Rm.data() + static_cast<std::size_t>(gi) * block_;
          for (int bi = 0; bi < block_; ++bi) acc += row[bi] * src[bi];
          dst[gi] += acc;
        }
      }
    }
  }
}

CubePolyBasis orthonormal_polys(const Grid& g, const MomentTree& mom, const Cube& Q,
                                int kap, double tol) {
  const int n = g.dim();
  const int B = mcount(n, kap);
  if (mom.kap() < 2 * kap - 1)
    throw config_error("orthonormal_polys: moment tree order too small");
  const auto& mon = monomials_below(n, kap);
  const double* M = mom.at(g, Q);
  const auto gram = [&](const MIndex& a, const MIndex& b) {
    return M[mpos(n, a.b[0] + b.b[0], a.b[1] + b.b[1])];
  };
  // Inner product of coefficient vectors u, v over m_Q monomials.
  const auto ip = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int i = 0; i < B; ++i) {
      if (u[i] == 0.0) continue;
      for (int j = 0; j < B; ++j) {
        if (v[j] == 0.0) continue;
        s += u[i] * v[j] * gram(mon[i], mon[j]);
      }
    }
    return s;
  };

  CubePolyBasis out;
  out.block = B;
  std::vector<double> cand(B);
  for (int k = 0; k < B; ++k) {
    std::fill(cand.begin(), cand.end(), 0.0);
    cand[k] = 1.0;
    const double n0 = std::sqrt(std::max(ip(cand.data(), cand.data()), 0.0));
    if (!(n0 > 0.0)) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < out.rank; ++j) {
        const double* pj = out.row(j);
        const double c = ip(cand.data(), pj);
        for (int i = 0; i < B; ++i) cand[i] -= c * pj[i];
      }
    }
    const double nr = std::sqrt(std::max(ip(cand.data(), cand.data()), 0.0));
    if (nr <= tol * n0) continue;
    double sign = 1.0;
    double maxc = 0.0;
    for (int i = 0; i < B; ++i) maxc = std::max(maxc, std::abs(cand[i]));
    for (int i = 0; i < B; ++i) {
      if (std::abs(cand[i]) > 1e-12 * maxc) {
        sign = cand[i] > 0 ? 1.0 : -1.0;
        break;
      }
    }
    for (int i = 0; i < B; ++i) out.rows.push_back(sign * cand[i] / nr);
    ++out.rank;
  }
  return out;
}

}  // namespace twlab
