#include "twlab/constants.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "twlab/rng.hpp"
#include "twlab/simd.hpp"

namespace twlab {

namespace {

double box_mass_pair_norm(const Measure& sigma, const Measure& omega, const Box& q, int n,
                          double alpha) {
  const double vol = q.volume(n);
  const double nrm = std::pow(vol, 1.0 - alpha / n);
  return (sigma.mass_box(q) / nrm) * (omega.mass_box(q) / nrm);
}

}  // namespace

ConstantValue muckenhoupt_a2(const Measure& sigma, const Measure& omega, double alpha,
                             bool dyadic_only) {
  const Grid& g = sigma.grid();
  const int n = g.dim();
  ConstantValue out;
  out.witness.kind = "box";
  if (dyadic_only) {
    for (const Cube& c : g.all_cubes()) {
      const double v = box_mass_pair_norm(sigma, omega, g.box(c), n, alpha);
      if (v > out.value) {
        out.value = v;
        out.witness.box = g.box(c);
        out.witness.cubes = {c};
        out.witness.kind = "cube";
      }
    }
    return out;
  }
  const int m = g.leaves_per_axis();
  const double h = g.leaf_side();
  const Point& o = g.origin();
  for (int size = 1; size <= m; ++size) {
    for (int p0 = 0; p0 + size <= m; ++p0) {
      if (n == 1) {
        const Box q{{o[0] + p0 * h, 0.0}, {o[0] + (p0 + size) * h, 0.0}};
        const double v = box_mass_pair_norm(sigma, omega, q, n, alpha);
        if (v > out.value) {
          out.value = v;
          out.witness.box = q;
        }
      } else {
        for (int p1 = 0; p1 + size <= m; ++p1) {
          const Box q{{o[0] + p0 * h, o[1] + p1 * h},
                      {o[0] + (p0 + size) * h, o[1] + (p1 + size) * h}};
          const double v = box_mass_pair_norm(sigma, omega, q, n, alpha);
          if (v > out.value) {
            out.value = v;
            out.witness.box = q;
          }
        }
      }
    }
  }
  return out;
}

double poisson_tail(const Measure& mu, int m, double alpha, const Box& Q,
                    const std::optional<Cube>& support, const double* leaf_weights) {
  const Grid& g = mu.grid();
  const int n = g.dim();
  const double ell = Q.side(0);
  const Point c = Q.center();
  const double p = n + m - alpha;
  double acc = 0.0;
  if (n == 1) {
    const auto segment = [&](double a, double b) {
      // integral over [a,b] of (ell + |y - c|)^(-p) dy, in closed form
      const auto right = [&](double lo, double hi) {
        return (std::pow(ell + lo - c[0], 1.0 - p) - std::pow(ell + hi - c[0], 1.0 - p)) /
               (p - 1.0);
      };
      const auto left = [&](double lo, double hi) {
        return (std::pow(ell + c[0] - hi, 1.0 - p) - std::pow(ell + c[0] - lo, 1.0 - p)) /
               (p - 1.0);
      };
      if (a >= c[0]) return right(a, b);
      if (b <= c[0]) return left(a, b);
      return left(a, c[0]) + right(c[0], b);
    };
    const auto add_leaf = [&](std::int64_t id) {
      const double w = leaf_weights != nullptr ? leaf_weights[id] : 1.0;
      if (w == 0.0) return;
      const double d = mu.density(id);
      if (d == 0.0) return;
      const Box lb = g.box(g.leaf_from_id(id));
      acc += w * d * segment(lb.lo[0], lb.hi[0]);
    };
    if (support.has_value()) {
      g.for_each_leaf(*support, add_leaf);
    } else {
      for (std::int64_t id = 0; id < g.leaf_count(); ++id) add_leaf(id);
    }
  } else {
    const QuadRule& q = QuadRule::get(6);
    const double vol = std::pow(g.leaf_side(), 2);
    const auto add_leaf = [&](std::int64_t id) {
      const double w = leaf_weights != nullptr ? leaf_weights[id] : 1.0;
      if (w == 0.0) return;
      const double d = mu.density(id);
      if (d == 0.0) return;
      const Box lb = g.box(g.leaf_from_id(id));
      double s = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i)
        for (std::size_t j = 0; j < q.nodes.size(); ++j) {
          const double y0 = lb.center()[0] + q.nodes[i] * lb.side(0);
          const double y1 = lb.center()[1] + q.nodes[j] * lb.side(1);
          const double r = std::hypot(y0 - c[0], y1 - c[1]);
          s += q.weights[i] * q.weights[j] * std::pow(ell + r, -p);
        }
      acc += w * d * vol * s;
    };
    if (support.has_value()) {
      g.for_each_leaf(*support, add_leaf);
    } else {
      for (std::int64_t id = 0; id < g.leaf_count(); ++id) add_leaf(id);
    }
  }
  return acc * std::pow(ell, m);
}

ConstantValue cube_testing(const DiscreteOperator& op) {
  const Grid& g = op.grid();
  ConstantValue out;
  out.witness.kind = "cube";
  for (const Cube& Q : g.all_cubes()) {
    const double qs = op.sigma().mass(Q);
    if (!(qs > 0.0)) continue;
    std::vector<std::int64_t> qleaves;
    g.for_each_leaf(Q, [&](std::int64_t j) { qleaves.push_back(j); });
    double e = 0.0;
    for (std::int64_t i : qleaves) {
      const double wi = op.omega().leaf_mass(i);
      if (wi == 0.0) continue;
      double s = 0.0;
      for (std::int64_t j : qleaves) s += op.raw(i, j);
      e += s * s / wi;
    }
    const double v = e / qs;
    if (v > out.value) {
      out.value = v;
      out.witness.cubes = {Q};
    }
  }
  out.value = std::sqrt(out.value);
  return out;
}

namespace {

Eigen::MatrixXd unit_moment_inverse(int n, int kap) {
  const int B = mcount(n, kap);
  const auto& mon = monomials_below(n, kap);
  Eigen::MatrixXd H(B, B);
  for (int i = 0; i < B; ++i)
    for (int j = 0; j < B; ++j)
      H(i, j) = unit_moment(n, MIndex{{mon[i].b[0] + mon[j].b[0], mon[i].b[1] + mon[j].b[1]}});
  return H.inverse();
}

std::vector<std::int64_t> triple_leaves(const Grid& g, const Cube& Q) {
  const auto span = g.leaf_span(Q);
  std::vector<std::int64_t> out;
  const std::int64_t m = g.leaves_per_axis();
  const auto clamp = [m](std::int64_t v) { return std::clamp<std::int64_t>(v, 0, m); };
  const std::int64_t w0 = span.hi[0] - span.lo[0];
  if (g.dim() == 1) {
    for (std::int64_t i = clamp(span.lo[0] - w0); i < clamp(span.hi[0] + w0); ++i)
      out.push_back(i);
    return out;
  }
  const std::int64_t w1 = span.hi[1] - span.lo[1];
  for (std::int64_t i = clamp(span.lo[0] - w0); i < clamp(span.hi[0] + w0); ++i)
    for (std::int64_t j = clamp(span.lo[1] - w1); j < clamp(span.hi[1] + w1); ++j)
      out.push_back(i * m + j);
  return out;
}

}  // namespace

ConstantValue cube_testing_poly(const PolyOperator& op, int kappa, bool triple) {
  const Grid& g = op.grid();
  const int n = g.dim();
  if (kappa > op.col_kap()) throw config_error("testing: kappa exceeds the column degree");
  const int B = mcount(n, kappa);
  const int rowB = op.rowB();
  const Eigen::MatrixXd Hinv = unit_moment_inverse(n, op.row_kap());
  const double vol = std::pow(g.leaf_side(), n);
  ConstantValue out;
  out.witness.kind = "cube";

  std::vector<double> u(op.cols(), 0.0);
  std::vector<double> mom(rowB);
  for (const Cube& Q : g.all_cubes()) {
    const double qs = op.sigma().mass(Q);
    if (!(qs > 0.0)) continue;
    std::vector<std::int64_t> qleaves;
    g.for_each_leaf(Q, [&](std::int64_t j) { qleaves.push_back(j); });
    const auto region = triple ? triple_leaves(g, Q) : qleaves;
    for (int beta = 0; beta < B; ++beta) {
      for (std::int64_t j : qleaves) {
        const auto R = reexpand_matrix(g, Q, g.leaf_from_id(j), kappa);
        for (int b = 0; b < B; ++b)
          u[j * op.colB() + b] = R[static_cast<std::size_t>(beta) * B + b];
      }
      double e = 0.0;
      for (std::int64_t i : region) {
        const double dw = op.omega().density(i);
        if (dw == 0.0) continue;
        for (int rb = 0; rb < rowB; ++rb) {
          double s = 0.0;
          for (std::int64_t j : qleaves)
            s += simd::dot(op.row_ptr(i * rowB + rb) + j * op.colB(), u.data() + j * op.colB(),
                           op.colB());
          mom[rb] = s;
        }
        double qf = 0.0;
        for (int a = 0; a < rowB; ++a)
          for (int b = 0; b < rowB; ++b) qf += mom[a] * Hinv(a, b) * mom[b];
        e += qf / (dw * vol);
      }
      const double v = e / qs;
      if (v > out.value) {
        out.value = v;
        out.witness.cubes = {Q};
        out.witness.a = beta;
      }
      for (std::int64_t j : qleaves)
        std::fill(u.begin() + j * op.colB(), u.begin() + (j + 1) * op.colB(), 0.0);
    }
  }
  out.value = std::sqrt(out.value);
  return out;
}

namespace {

struct PivotalDp {
  const Measure& sigma;
  const Measure& omega;
  double alpha;
  int kappa;
  Cube ambient;
  std::vector<char> stop_here;

  double score(const Grid& g, const Cube& R) const {
    const double mw = omega.mass(R);
    if (mw == 0.0) return 0.0;
    const double p = poisson_tail(sigma, kappa, alpha, g.box(R), ambient);
    return p * p * mw;
  }

  double best(const Grid& g, const Cube& R) {
    const double own = score(g, R);
    if (g.is_leaf(R)) {
      stop_here[g.cube_id(R)] = 1;
      return own;
    }
    double split = 0.0;
    for (const Cube& ch : g.children(R)) split += best(g, ch);
    if (own >= split) {
      stop_here[g.cube_id(R)] = 1;
      return own;
    }
    stop_here[g.cube_id(R)] = 0;
    return split;
  }

  void collect(const Grid& g, const Cube& R, std::vector<Cube>& out) const {
    if (stop_here[g.cube_id(R)]) {
      out.push_back(R);
      return;
    }
    for (const Cube& ch : g.children(R)) collect(g, ch, out);
  }
};

}  // namespace

PivotalResult pivotal_constant(const Measure& sigma, const Measure& omega, double alpha,
                               int kappa) {
  const Grid& g = sigma.grid();
  PivotalResult out;
  double best2 = 0.0;
  for (const Cube& Q : g.all_cubes()) {
    const double qs = sigma.mass(Q);
    if (!(qs > 0.0)) continue;
    PivotalDp dp{sigma, omega, alpha, kappa, Q, std::vector<char>(g.cube_count(), 0)};
    const double v = dp.best(g, Q) / qs;
    if (v > best2) {
      best2 = v;
      out.ambient = Q;
      out.antichain.clear();
      dp.collect(g, Q, out.antichain);
    }
  }
  out.value = std::sqrt(best2);
  return out;
}

double pivotal_plain_recursion(const Measure& sigma, const Measure& omega, double alpha,
                               int kappa, const Cube& ambient) {
  const Grid& g = sigma.grid();
  const std::function<double(const Cube&)> rec = [&](const Cube& R) -> double {
    double own = 0.0;
    const double mw = omega.mass(R);
    if (mw > 0.0) {
      const double p = poisson_tail(sigma, kappa, alpha, g.box(R), ambient);
      own = p * p * mw;
    }
    if (g.is_leaf(R)) return own;
    double split = 0.0;
    for (const Cube& ch : g.children(R)) split += rec(ch);
    return std::max(own, split);
  };
  const double qs = sigma.mass(ambient);
  return qs > 0.0 ? std::sqrt(rec(ambient) / qs) : 0.0;
}

namespace {

// Sums over every antichain of the subtree, materialized as one value per
// antichain: an antichain is the empty set, the node itself, or a choice of
// one antichain per child (their concatenation), so the value list is
// {0, score(R)} followed by all cross sums of the child lists.
void enumerate_antichain_sums(const Grid& g, const Cube& R,
                              const std::function<double(const Cube&)>& score,
                              std::vector<double>& out) {
  out.clear();
  out.push_back(0.0);
  out.push_back(score(R));
  if (g.is_leaf(R)) return;
  std::vector<double> acc{0.0};
  std::vector<double> child_sums, next;
  for (const Cube& c : g.children(R)) {
    enumerate_antichain_sums(g, c, score, child_sums);
    next.clear();
    next.reserve(acc.size() * child_sums.size());
    for (double a : acc)
      for (double b : child_sums) next.push_back(a + b);
    acc = next;
  }
  // drop the all-empty combination (already listed as 0)
  out.insert(out.end(), acc.begin() + 1, acc.end());
}

}  // namespace

double pivotal_enumerate_antichains(const Measure& sigma, const Measure& omega, double alpha,
                                    int kappa, const Cube& ambient) {
  const Grid& g = sigma.grid();
  const int height = g.depth() - ambient.level;
  if (height > (g.dim() == 1 ? 4 : 2))
    throw config_error("antichain enumeration limited to height 4 (2 in 2D)");
  const double qs = sigma.mass(ambient);
  if (!(qs > 0.0)) return 0.0;
  // scores cached per subtree cube; the enumeration only sums them
  std::vector<double> cache(g.cube_count(), -1.0);
  const auto score = [&](const Cube& R) {
    double& c = cache[g.cube_id(R)];
    if (c >= 0.0) return c;
    const double mw = omega.mass(R);
    if (mw == 0.0) return c = 0.0;
    const double p = poisson_tail(sigma, kappa, alpha, g.box(R), ambient);
    return c = p * p * mw;
  };
  std::vector<double> sums;
  enumerate_antichain_sums(g, ambient, score, sums);
  double best = 0.0;
  for (double s : sums) best = std::max(best, s);
  return std::sqrt(best / qs);
}

double pivotal_random_antichains(const Measure& sigma, const Measure& omega, double alpha,
                                 int kappa, const Cube& ambient, int count,
                                 std::uint64_t seed) {
  const Grid& g = sigma.grid();
  const double qs = sigma.mass(ambient);
  if (!(qs > 0.0)) return 0.0;
  SplitMix64 rng(seed);
  double best = 0.0;
  for (int trial = 0; trial < count; ++trial) {
    double s = 0.0;
    const std::function<void(const Cube&)> walk = [&](const Cube& R) {
      if (g.is_leaf(R) || rng.next_unit() < 0.4) {
        const double mw = omega.mass(R);
        if (mw > 0.0) {
          const double p = poisson_tail(sigma, kappa, alpha, g.box(R), ambient);
          s += p * p * mw;
        }
        return;
      }
      for (const Cube& ch : g.children(R)) walk(ch);
    };
    walk(ambient);
    best = std::max(best, s);
  }
  return std::sqrt(best / qs);
}

ConstantValue wbp_constant(const PolyOperator& op, int kappa1, int kappa2) {
  const Grid& g = op.grid();
  const int n = g.dim();
  if (kappa1 > op.col_kap() || kappa2 > op.row_kap())
    throw config_error("wbp: kappa exceeds assembled degrees");
  MomentTree mom_s(op.sigma(), 2 * kappa1 - 1);
  MomentTree mom_w(op.omega(), 2 * kappa2 - 1);
  const auto cubes = g.all_cubes();

  ConstantValue out;
  out.witness.kind = "pair";
  std::vector<double> ucol(op.cols(), 0.0), vrow(op.rows(), 0.0);
  for (const Cube& Q : cubes) {
    const Box bq = g.box(Q);
    if (!(op.sigma().mass(Q) > 0.0)) continue;
    for (const Cube& Qp : cubes) {
      const Box bp = g.box(Qp);
      if (!bq.disjoint(bp, n)) continue;
      const bool q_in_3qp = bp.dilated(3.0, n).contains(bq, n);
      const bool qp_in_3q = bq.dilated(3.0, n).contains(bp, n);
      if (!q_in_3qp && !qp_in_3q) continue;
      if (!(op.omega().mass(Qp) > 0.0)) continue;
      const CubePolyBasis ps = orthonormal_polys(g, mom_s, Q, kappa1);
      const CubePolyBasis pw = orthonormal_polys(g, mom_w, Qp, kappa2);
      if (ps.rank == 0 || pw.rank == 0) continue;
      Eigen::MatrixXd M(pw.rank, ps.rank);
      std::vector<std::int64_t> qleaves, pleaves;
      g.for_each_leaf(Q, [&](std::int64_t j) { qleaves.push_back(j); });
      g.for_each_leaf(Qp, [&](std::int64_t i) { pleaves.push_back(i); });
      for (int a = 0; a < ps.rank; ++a) {
        for (std::int64_t j : qleaves) {
          const auto R = reexpand_matrix(g, Q, g.leaf_from_id(j), kappa1);
          for (int b = 0; b < ps.block; ++b) {
            double v = 0.0;
            for (int gi = 0; gi < ps.block; ++gi)
              v += ps.row(a)[gi] * R[static_cast<std::size_t>(gi) * ps.block + b];
            ucol[j * op.colB() + b] = v;
          }
        }
        for (int b = 0; b < pw.rank; ++b) {
          double acc = 0.0;
          for (std::int64_t i : pleaves) {
            const auto R = reexpand_matrix(g, Qp, g.leaf_from_id(i), kappa2);
            for (int rb = 0; rb < pw.block; ++rb) {
              double v = 0.0;
              for (int gi = 0; gi < pw.block; ++gi)
                v += pw.row(b)[gi] * R[static_cast<std::size_t>(gi) * pw.block + rb];
              if (v == 0.0) continue;
              double s = 0.0;
              for (std::int64_t j : qleaves)
                s += simd::dot(op.row_ptr(i * op.rowB() + rb) + j * op.colB(),
                               ucol.data() + j * op.colB(), op.colB());
              acc += v * s;
            }
          }
          M(b, a) = acc;
        }
        for (std::int64_t j : qleaves)
          std::fill(ucol.begin() + j * op.colB(), ucol.begin() + (j + 1) * op.colB(), 0.0);
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
      const double v = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
      if (v > out.value) {
        out.value = v;
        out.witness.cubes = {Q, Qp};
      }
    }
  }
  return out;
}

double shell_integral(const KernelSpec& k, const Measure& sigma, const Point& x, double eps,
                      double N, AnnulusNorm norm, int quad_order) {
  const Grid& g = sigma.grid();
  const int n = g.dim();
  const QuadRule& q = QuadRule::get(quad_order);
  const int G = static_cast<int>(q.nodes.size());
  const double vol = std::pow(g.leaf_side(), n);
  double acc = 0.0;
  for (std::int64_t id = 0; id < g.leaf_count(); ++id) {
    const double d = sigma.density(id);
    if (d == 0.0) continue;
    const Box lb = g.box(g.leaf_from_id(id));
    if (n == 1) {
      for (int i = 0; i < G; ++i) {
        const double y = lb.center()[0] + q.nodes[i] * lb.side(0);
        const double r = std::abs(y - x[0]);
        if (r <= eps || r >= N) continue;
        acc += d * vol * q.weights[i] * k.eval(x, {y, 0.0});
      }
    } else {
      for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
          const Point y{lb.center()[0] + q.nodes[i] * lb.side(0),
                        lb.center()[1] + q.nodes[j] * lb.side(1)};
          const Point diff{y[0] - x[0], y[1] - x[1]};
          const double r = norm == AnnulusNorm::cube ? norm_sup(diff, 2) : norm_euclid(diff, 2);
          if (r <= eps || r >= N) continue;
          acc += d * vol * q.weights[i] * q.weights[j] * k.eval(x, y);
        }
    }
  }
  return acc;
}

ConstantValue cancellation_constant(const KernelSpec& k, const Measure& sigma,
                                    const Measure& omega, AnnulusNorm norm, int quad_order) {
  const Grid& g = sigma.grid();
  const int n = g.dim();
  const QuadRule& q = QuadRule::get(quad_order);
  const int G = static_cast<int>(q.nodes.size());
  const int gn = n == 1 ? G : G * G;
  const double vol = std::pow(g.leaf_side(), n);
  const std::int64_t N = g.leaf_count();

  std::vector<double> x0s(N * gn), x1s(N * gn), wout(N * gn);
  for (std::int64_t id = 0; id < N; ++id) {
    const Box lb = g.box(g.leaf_from_id(id));
    for (int t = 0; t < gn; ++t) {
      const int i = n == 1 ? t : t / G;
      const int j = n == 1 ? 0 : t % G;
      x0s[id * gn + t] = lb.center()[0] + q.nodes[i] * lb.side(0);
      x1s[id * gn + t] = n == 2 ? lb.center()[1] + q.nodes[j] * lb.side(1) : 0.0;
      wout[id * gn + t] =
          omega.density(id) * vol * (n == 1 ? q.weights[i] : q.weights[i] * q.weights[j]);
    }
  }

  ConstantValue out;
  out.witness.kind = "shell";
  std::vector<double> F(N * gn);
  const Box rb = g.root_box();
  for (int kn = 0; kn <= g.depth(); ++kn) {
    const double radius = std::ldexp(g.root_side(), -kn);
    for (int ke = kn + 1; ke <= g.depth(); ++ke) {
      const double eps = std::ldexp(g.root_side(), -ke);
      for (std::int64_t t = 0; t < N * gn; ++t)
        F[t] = wout[t] == 0.0 && sigma.total_mass() == 0.0
                   ? 0.0
                   : shell_integral(k, sigma, {x0s[t], x1s[t]}, eps, radius, norm, quad_order);
      for (std::int64_t c = 0; c < N; ++c) {
        const Point x0 = g.center(g.leaf_from_id(c));
        const Box ball{{x0[0] - radius, x0[1] - radius}, {x0[0] + radius, x0[1] + radius}};
        bool clipped = false;
        double den;
        if (norm == AnnulusNorm::cube || n == 1) {
          den = sigma.mass_box(ball, &clipped);
        } else {
          den = 0.0;
          for (std::int64_t id = 0; id < N; ++id) {
            const double d = sigma.density(id);
            if (d == 0.0) continue;
            const Box lb = g.box(g.leaf_from_id(id));
            for (int i = 0; i < G; ++i)
              for (int j = 0; j < G; ++j) {
                const Point y{lb.center()[0] + q.nodes[i] * lb.side(0),
                              lb.center()[1] + q.nodes[j] * lb.side(1)};
                if (norm_euclid({y[0] - x0[0], y[1] - x0[1]}, 2) < radius)
                  den += d * vol * q.weights[i] * q.weights[j];
              }
          }
          clipped = ball.lo[0] < rb.lo[0] || ball.hi[0] > rb.hi[0] || ball.lo[1] < rb.lo[1] ||
                    ball.hi[1] > rb.hi[1];
        }
        if (!(den > 0.0)) continue;
        double num = 0.0;
        for (std::int64_t t = 0; t < N * gn; ++t) {
          if (wout[t] == 0.0) continue;
          const Point diff{x0s[t] - x0[0], x1s[t] - x0[1]};
          const double r = norm == AnnulusNorm::cube ? norm_sup(diff, n) : norm_euclid(diff, n);
          if (r < radius) num += wout[t] * F[t] * F[t];
        }
        const double v = num / den;
        if (v > out.value) {
          out.value = v;
          out.witness.box = ball;
          out.witness.a = eps;
          out.witness.b = radius;
          out.witness.clipped = clipped;
        }
      }
    }
  }
  return out;
}

const char* profile_name(TestProfile p) {
  switch (p) {
    case TestProfile::cube: return "cube";
    case TestProfile::ball: return "ball";
    case TestProfile::halfwidth: return "halfwidth";
  }
  return "?";
}

namespace {

double leaf_box_coverage(const Grid& g, std::int64_t id, const Box& b) {
  const Box lb = g.box(g.leaf_from_id(id));
  double f = 1.0;
  for (int kk = 0; kk < g.dim(); ++kk) {
    const double lo = std::max(lb.lo[kk], b.lo[kk]);
    const double hi = std::min(lb.hi[kk], b.hi[kk]);
    if (hi <= lo) return 0.0;
    f *= (hi - lo) / lb.side(kk);
  }
  return f;
}

double leaf_disc_coverage(const Grid& g, std::int64_t id, const Point& c, double radius) {
  const Box lb = g.box(g.leaf_from_id(id));
  const int S = 16;
  int inside = 0;
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) {
      const double y0 = lb.lo[0] + (i + 0.5) / S * lb.side(0);
      const double y1 = lb.lo[1] + (j + 0.5) / S * lb.side(1);
      if (std::hypot(y0 - c[0], y1 - c[1]) < radius) ++inside;
    }
  return static_cast<double>(inside) / (S * S);
}

}  // namespace

ConstantValue b_testing(const DiscreteOperator& op, TestProfile profile, double delta_full) {
  const Grid& g = op.grid();
  const int n = g.dim();
  const std::int64_t N = op.leaves();
  ConstantValue out;
  out.witness.kind = "cube";
  std::vector<double> b(N);
  for (const Cube& Q : g.all_cubes()) {
    const Box bq = g.box(Q);
    std::fill(b.begin(), b.end(), 0.0);
    switch (profile) {
      case TestProfile::cube:
        g.for_each_leaf(Q, [&](std::int64_t j) { b[j] = 1.0; });
        break;
      case TestProfile::halfwidth: {
        const Box half = bq.dilated(0.5, n);
        const double height = std::pow(2.0, n);
        g.for_each_leaf(Q,
                        [&](std::int64_t j) { b[j] = height * leaf_box_coverage(g, j, half); });
        break;
      }
      case TestProfile::ball: {
        if (n == 1) {
          g.for_each_leaf(Q, [&](std::int64_t j) { b[j] = 1.0; });
        } else {
          const double height = 4.0 / M_PI;
          g.for_each_leaf(Q, [&](std::int64_t j) {
            b[j] = height * leaf_disc_coverage(g, j, bq.center(), 0.5 * bq.side(0));
          });
        }
        break;
      }
    }
    double den = 0.0;
    g.for_each_leaf(Q, [&](std::int64_t j) { den += b[j] * b[j] * op.sigma().leaf_mass(j); });
    if (!(den > 0.0)) continue;
    const auto img = op.apply(b);
    double num = 0.0;
    bool clipped = false;
    if (delta_full > 0.0) {
      const Box region = bq.dilated(2.0 / delta_full, n);
      for (std::int64_t i = 0; i < N; ++i) {
        const double cov = leaf_box_coverage(g, i, region);
        if (cov > 0.0) num += cov * op.omega().leaf_mass(i) * img[i] * img[i];
      }
      clipped = !g.root_box().contains(region, n);
    } else {
      g.for_each_leaf(Q,
                      [&](std::int64_t i) { num += op.omega().leaf_mass(i) * img[i] * img[i]; });
    }
    const double v = num / den;
    if (v > out.value) {
      out.value = v;
      out.witness.cubes = {Q};
      out.witness.a = delta_full;
      out.witness.clipped = clipped;
    }
  }
  out.value = std::sqrt(out.value);
  return out;
}

RatioReport poisson_decay_check(const Measure& sigma, int m, double alpha, double eps,
                                int count, std::uint64_t seed) {
  const Grid& g = sigma.grid();
  const int n = g.dim();
  if (g.depth() < 3) throw config_error("poisson decay check needs depth >= 3");
  SplitMix64 rng(seed);
  RatioReport rep;
  std::vector<double> weights(g.leaf_count());
  while (rep.samples < count && rep.rejected < 1000 * count) {
    // sample the nesting levels, then place J inside the central window of I
    // where the boundary-distance hypothesis can hold at all
    const int lk = static_cast<int>(rng.next_u64() % (g.depth() - 2));
    const int li = lk + 1 + static_cast<int>(rng.next_u64() % (g.depth() - lk - 1));
    const int lj = li + 1 + static_cast<int>(rng.next_u64() % (g.depth() - li));
    const double need = 2.0 * std::sqrt(static_cast<double>(n)) *
                        std::pow(g.side_of(lj), eps) * std::pow(g.side_of(li), 1.0 - eps);
    const int cells = 1 << (lj - li);  // J cells per axis inside I
    const int margin = static_cast<int>(std::floor(need / g.side_of(lj))) + 1;
    if (2 * margin >= cells) {
      ++rep.rejected;
      continue;
    }
    Cube I;
    I.level = li;
    for (int kk = 0; kk < n; ++kk)
      I.idx[kk] = static_cast<std::int32_t>(rng.next_u64() % g.cells_per_axis(li));
    for (int kk = n; kk < 2; ++kk) I.idx[kk] = 0;
    Cube J;
    J.level = lj;
    for (int kk = 0; kk < n; ++kk)
      J.idx[kk] = static_cast<std::int32_t>(
          I.idx[kk] * cells + margin + rng.next_u64() % (cells - 2 * margin));
    for (int kk = n; kk < 2; ++kk) J.idx[kk] = 0;
    const Cube K = g.ancestor(I, lk);
    if (dist_sup_to_boundary(g.box(J), g.box(I), n) <= need) {
      ++rep.rejected;
      continue;
    }
    std::fill(weights.begin(), weights.end(), 0.0);
    g.for_each_leaf(K, [&](std::int64_t id) { weights[id] = 1.0; });
    g.for_each_leaf(I, [&](std::int64_t id) { weights[id] = 0.0; });
    const double pi = poisson_tail(sigma, m, alpha, g.box(I), std::nullopt, weights.data());
    if (!(pi > 0.0)) {
      ++rep.rejected;
      continue;
    }
    const double pj = poisson_tail(sigma, m, alpha, g.box(J), std::nullopt, weights.data());
    const double decay = std::pow(g.side_of(lj) / g.side_of(li), m - eps * (n + m - alpha));
    const double ratio = pj / (decay * pi);
    ++rep.samples;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.witness.kind = "triple";
      rep.witness.cubes = {J, I, K};
    }
  }
  return rep;
}

RatioReport pivotal_bound_check(const DiscreteOperator& op, const AlpertSystem& omega_sys,
                                int kappa, double gamma, int count, std::uint64_t seed) {
  const Grid& g = op.grid();
  const int n = g.dim();
  const Measure& sigma = op.sigma();
  const Measure& omega = op.omega();
  const double alpha = op.kernel().alpha;
  SplitMix64 rng(seed);
  RatioReport rep;
  std::vector<double> nu(g.leaf_count());
  while (rep.samples < count && rep.rejected < 200 * count) {
    const int maxlvl = std::max(1, gamma == 2.0 ? g.depth() - 1 : g.depth() - 1);
    const int lj = 1 + static_cast<int>(rng.next_u64() % maxlvl);
    Cube J;
    J.level = lj;
    for (int kk = 0; kk < n; ++kk)
      J.idx[kk] = static_cast<std::int32_t>(rng.next_u64() % g.cells_per_axis(lj));
    for (int kk = n; kk < 2; ++kk) J.idx[kk] = 0;
    const auto& wb = omega_sys.wavelets(J);
    if (wb.dim == 0 || !(omega.mass(J) > 0.0)) {
      ++rep.rejected;
      continue;
    }
    const Box dil = g.box(J).dilated(gamma, n);
    bool any = false;
    for (std::int64_t id = 0; id < g.leaf_count(); ++id) {
      const double cov = leaf_box_coverage(g, id, dil);
      if (cov > 1e-12 && cov < 1.0 - 1e-12)
        throw numeric_error("pivotal bound: dilate not leaf aligned");
      nu[id] = cov > 0.5 ? 0.0 : 1.0;
      any = any || nu[id] > 0.0;
    }
    if (!any) {
      ++rep.rejected;
      continue;
    }
    const auto img = op.apply(nu);
    std::vector<double> coef(wb.dim);
    double c2 = 0.0;
    for (auto& c : coef) {
      c = rng.next_in(-1.0, 1.0);
      c2 += c * c;
    }
    AlpertSystem::Coeffs fake;
    fake.wav.assign(omega_sys.total_wavelet_dim(), 0.0);
    std::copy(coef.begin(), coef.end(), fake.wav.begin() + omega_sys.wavelet_offset(J));
    LeafPoly psi(g, kappa);
    omega_sys.add_delta(psi, fake, J);
    LeafPoly rpoly(g, kappa);
    std::vector<double> rc(mcount(n, kappa));
    for (auto& c : rc) c = rng.next_in(-1.0, 1.0);
    rpoly.add_on_cube(J, rc.data(), kappa);
    double rsup = 0.0;
    g.for_each_leaf(J,
                    [&](std::int64_t id) { rsup = std::max(rsup, rpoly.sampled_sup_on_leaf(id)); });
    if (!(rsup > 0.0)) {
      ++rep.rejected;
      continue;
    }
    LeafPoly weighted = rpoly.multiplied(LeafPoly::from_leaf_values(g, img));
    const double lhs = std::abs(weighted.inner(psi, omega)) / rsup;
    const double tail = poisson_tail(sigma, kappa, alpha, g.box(J), std::nullopt, nu.data());
    const double rhs = tail * std::sqrt(omega.mass(J)) * std::sqrt(c2);
    if (!(rhs > 0.0)) {
      ++rep.rejected;
      continue;
    }
    ++rep.samples;
    const double ratio = lhs / rhs;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.witness.kind = "cube";
      rep.witness.cubes = {J};
      rep.witness.a = gamma;
    }
  }
  return rep;
}

}  // namespace twlab
