#include "twlab/alpert.hpp"

#include <algorithm>
#include <cmath>

namespace twlab {

AlpertSystem::AlpertSystem(const Measure& mu, int kappa, double tol)
    : mu_(mu),
      kappa_(kappa),
      B_(mcount(mu.grid().dim(), kappa)),
      tol_(tol),
      mom_(mu_, 2 * kappa - 1) {
  if (kappa < 1 || kappa > 6) throw config_error("alpert: kappa out of range");
  const Grid& g = grid();
  wav_.resize(g.cube_count());
  coarse_.resize(g.cube_count());
  offset_.assign(g.cube_count(), 0);
  for (const Cube& c : g.all_cubes()) {
    coarse_[g.cube_id(c)] = orthonormal_polys(g, mom_, c, kappa_, tol_);
    if (!g.is_leaf(c)) build_cube(c);
  }
  int off = 0;
  for (const Cube& c : g.all_cubes()) {
    offset_[g.cube_id(c)] = off;
    off += wav_[g.cube_id(c)].dim;
  }
  total_dim_ = off;
}

void AlpertSystem::build_cube(const Cube& c) {
  const Grid& g = grid();
  const int n = g.dim();
  const int nc = 1 << n;
  const int F = nc * B_;
  CubeWaveletBasis& wb = wav_[g.cube_id(c)];
  wb.frame = F;

  if (!(mu_.mass(c) > 0.0)) return;  // degenerate cube: empty wavelet space

  // Child moment blocks give the (block diagonal) frame Gram.
  const auto& mon = monomials_below(n, kappa_);
  std::vector<const double*> cm(nc);
  std::vector<std::vector<double>> R(nc);
  for (int which = 0; which < nc; ++which) {
    const Cube ch = g.child(c, which);
    cm[which] = mom_.at(g, ch);
    R[which] = reexpand_matrix(g, c, ch, kappa_);
  }
  const auto ip = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int w = 0; w < nc; ++w) {
      const double* M = cm[w];
      const double* uu = u + w * B_;
      const double* vv = v + w * B_;
      for (int i = 0; i < B_; ++i) {
        if (uu[i] == 0.0) continue;
        for (int j = 0; j < B_; ++j) {
          if (vv[j] == 0.0) continue;
          s += uu[i] * vv[j] * M[mpos(n, mon[i].b[0] + mon[j].b[0], mon[i].b[1] + mon[j].b[1])];
        }
      }
    }
    return s;
  };

  // Degree-<kappa polynomials on c, written in the child frame; orthonormal
  // already, and the wavelet space is the frame orthocomplement of their span.
  const CubePolyBasis& cp = coarse_[g.cube_id(c)];
  std::vector<std::vector<double>> pf;
  for (int j = 0; j < cp.rank; ++j) {
    std::vector<double> v(F, 0.0);
    const double* row = cp.row(j);
    for (int w = 0; w < nc; ++w)
      for (int gi = 0; gi < B_; ++gi) {
        if (row[gi] == 0.0) continue;
        for (int bi = 0; bi < B_; ++bi)
          v[w * B_ + bi] += row[gi] * R[w][static_cast<std::size_t>(gi) * B_ + bi];
      }
    pf.push_back(std::move(v));
  }

  std::vector<double> cand(F);
  for (int w = 0; w < nc; ++w) {
    for (int k = 0; k < B_; ++k) {
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[w * B_ + k] = 1.0;
      const double n0 = std::sqrt(std::max(ip(cand.data(), cand.data()), 0.0));
      if (!(n0 > 0.0)) continue;
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& p : pf) {
          const double t = ip(cand.data(), p.data());
          for (int i = 0; i < F; ++i) cand[i] -= t * p[i];
        }
        for (int a = 0; a < wb.dim; ++a) {
          const double* h = wb.row(a);
          const double t = ip(cand.data(), h);
          for (int i = 0; i < F; ++i) cand[i] -= t * h[i];
        }
      }
      const double nr = std::sqrt(std::max(ip(cand.data(), cand.data()), 0.0));
      if (nr <= tol_ * n0) continue;
      double maxc = 0.0;
      for (int i = 0; i < F; ++i) maxc = std::max(maxc, std::abs(cand[i]));
      double sign = 1.0;
      for (int i = 0; i < F; ++i) {
        if (std::abs(cand[i]) > 1e-12 * maxc) {
          sign = cand[i] > 0 ? 1.0 : -1.0;
          break;
        }
      }
      for (int i = 0; i < F; ++i) wb.rows.push_back(sign * cand[i] / nr);
      ++wb.dim;
    }
  }
}

AlpertSystem::Coeffs AlpertSystem::transform(const LeafPoly& f) const {
  const Grid& g = grid();
  const int n = g.dim();
  const int nc = 1 << n;
  WeightedMomentTree N(mu_, f, kappa_);
  Coeffs out;
  out.wav.assign(total_dim_, 0.0);
  for (const Cube& c : g.all_cubes()) {
    const CubeWaveletBasis& wb = wav_[g.cube_id(c)];
    if (wb.dim == 0) continue;
    std::vector<const double*> cn(nc);
    for (int w = 0; w < nc; ++w) cn[w] = N.at(g, g.child(c, w));
    double* dst = out.wav.data() + offset_[g.cube_id(c)];
    for (int a = 0; a < wb.dim; ++a) {
      const double* h = wb.row(a);
      double acc = 0.0;
      for (int w = 0; w < nc; ++w)
        for (int b = 0; b < B_; ++b) acc += h[w * B_ + b] * cn[w][b];
      dst[a] = acc;
    }
  }
  const CubePolyBasis& rc = coarse_[g.cube_id(g.root())];
  const double* nr = N.at(g, g.root());
  for (int j = 0; j < rc.rank; ++j) {
    double acc = 0.0;
    for (int b = 0; b < B_; ++b) acc += rc.row(j)[b] * nr[b];
    out.root.push_back(acc);
  }
  return out;
}

AlpertSystem::Coeffs AlpertSystem::transform_values(const std::vector<double>& v) const {
  return transform(LeafPoly::from_leaf_values(grid(), v));
}

LeafPoly AlpertSystem::reconstruct(const Coeffs& c) const {
  const Grid& g = grid();
  LeafPoly acc(g, kappa_);
  const CubePolyBasis& rc = coarse_[g.cube_id(g.root())];
  std::vector<double> rp(B_, 0.0);
  for (int j = 0; j < rc.rank; ++j)
    for (int b = 0; b < B_; ++b) rp[b] += c.root[j] * rc.row(j)[b];
  acc.add_on_cube(g.root(), rp.data(), kappa_);
  for (const Cube& q : g.all_cubes()) {
    if (wav_[g.cube_id(q)].dim == 0) continue;
    add_delta(acc, c, q);
  }
  return acc;
}

std::vector<double> AlpertSystem::delta_frame(const Coeffs& c, const Cube& I) const {
  const Grid& g = grid();
  const CubeWaveletBasis& wb = wav_[g.cube_id(I)];
  std::vector<double> v(wb.frame, 0.0);
  const double* src = c.wav.data() + offset_[g.cube_id(I)];
  for (int a = 0; a < wb.dim; ++a) {
    const double* h = wb.row(a);
    for (int i = 0; i < wb.frame; ++i) v[i] += src[a] * h[i];
  }
  return v;
}

void AlpertSystem::add_delta(LeafPoly& acc, const Coeffs& c, const Cube& I, double scale) const {
  const Grid& g = grid();
  const int nc = 1 << g.dim();
  const auto v = delta_frame(c, I);
  for (int w = 0; w < nc; ++w)
    acc.add_on_cube(g.child(I, w), v.data() + w * B_, kappa_, scale);
}

std::vector<double> AlpertSystem::coarse_poly(const Cube& Q, const WeightedMomentTree& N) const {
  const Grid& g = grid();
  const CubePolyBasis& cp = coarse_[g.cube_id(Q)];
  const double* nq = N.at(g, Q);
  std::vector<double> out(B_, 0.0);
  for (int j = 0; j < cp.rank; ++j) {
    double acc = 0.0;
    for (int b = 0; b < B_; ++b) acc += cp.row(j)[b] * nq[b];
    for (int b = 0; b < B_; ++b) out[b] += acc * cp.row(j)[b];
  }
  return out;
}

double AlpertSystem::coeff_norm2(const Coeffs& c) const {
  double s = 0.0;
  for (double x : c.wav) s += x * x;
  for (double x : c.root) s += x * x;
  return s;
}

void AlpertSystem::corrupt_for_testing(double amount) {
  for (auto& wb : wav_) {
    if (wb.dim > 0) {
      wb.rows[0] += amount;
      return;
    }
  }
}

std::vector<double> frame_gram(const Grid& g, const MomentTree& mom, const Cube& Q, int kappa) {
  if (mom.kap() < 2 * kappa - 1) throw config_error("frame_gram: moment tree order too small");
  const int n = g.dim();
  const int nc = 1 << n;
  const int B = mcount(n, kappa);
  const int F = nc * B;
  const auto& mon = monomials_below(n, kappa);
  std::vector<double> G(static_cast<std::size_t>(F) * F, 0.0);
  for (int w = 0; w < nc; ++w) {
    const double* M = mom.at(g, g.child(Q, w));
    for (int i = 0; i < B; ++i)
      for (int j = 0; j < B; ++j)
        G[static_cast<std::size_t>(w * B + i) * F + (w * B + j)] =
            M[mpos(n, mon[i].b[0] + mon[j].b[0], mon[i].b[1] + mon[j].b[1])];
  }
  return G;
}

SupBoundReport sup_bound_check(const AlpertSystem& sys, int nsamples, std::uint64_t seed) {
  const Grid& g = sys.grid();
  const Measure& mu = sys.measure();
  SupBoundReport rep;
  rep.samples = nsamples;
  SplitMix64 rng(seed);
  for (int s = 0; s < nsamples; ++s) {
    std::vector<double> f(g.leaf_count());
    for (auto& x : f) x = rng.next_in(-1.0, 1.0);
    LeafPoly fp = LeafPoly::from_leaf_values(g, f);
    WeightedMomentTree N(mu, fp, sys.kappa());
    for (const Cube& c : g.all_cubes()) {
      const double m = mu.mass(c);
      if (!(m > 0.0)) continue;
      double l2 = 0.0;
      g.for_each_leaf(c, [&](std::int64_t id) { l2 += mu.leaf_mass(id) * f[id] * f[id]; });
      const double denom = std::sqrt(l2 / m);
      if (!(denom > 0.0)) continue;
      const auto p = sys.coarse_poly(c, N);
      LeafPoly ep(g, sys.kappa());
      ep.add_on_cube(c, p.data(), sys.kappa());
      double sup = 0.0;
      g.for_each_leaf(c, [&](std::int64_t id) {
        if (mu.density(id) > 0.0) sup = std::max(sup, ep.sampled_sup_on_leaf(id));
      });
      const double ratio = sup / denom;
      if (ratio > rep.max_ratio) {
        rep.max_ratio = ratio;
        rep.argmax = c;
      }
    }
  }
  return rep;
}

}  // namespace twlab
