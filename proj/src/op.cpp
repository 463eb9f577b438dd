#include "twlab/op.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cstring>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "twlab/simd.hpp"

namespace twlab {

const QuadRule& QuadRule::get(int order) {
  static std::mutex mx;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mx);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  if (order < 1 || order > 24) throw config_error("quadrature order out of range");
  QuadRule q;
  q.nodes.resize(order);
  q.weights.resize(order);
  // Newton iteration on Legendre polynomials over [-1,1], then map to
  // [-1/2,1/2] with weights normalized to sum 1.
  for (int i = 0; i < order; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = order * (x * p1 - p0) / (x * x - 1.0);
    q.nodes[i] = 0.5 * x;
    q.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // weight/2 of [-1,1] rule
  }
  return cache.emplace(order, std::move(q)).first->second;
}

namespace {

void parallel_rows(std::int64_t n, int threads, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (threads <= 0) {
    const char* e = std::getenv("TW_LAB_THREADS");
    threads = e != nullptr ? std::max(1, std::atoi(e))
                           : static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = static_cast<int>(std::min<std::int64_t>(threads, n));
  if (threads <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = t * chunk, hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

// Euclidean min/max distances between two boxes.
void box_distances(const Box& a, const Box& b, int n, double* dmin, double* dmax) {
  double mn = 0.0, mx = 0.0;
  for (int k = 0; k < n; ++k) {
    const double gap = std::max({0.0, b.lo[k] - a.hi[k], a.lo[k] - b.hi[k]});
    const double far = std::max(std::abs(b.hi[k] - a.lo[k]), std::abs(a.hi[k] - b.lo[k]));
    mn += gap * gap;
    mx += far * far;
  }
  *dmin = std::sqrt(mn);
  *dmax = std::sqrt(mx);
}

struct NodeTables {
  int gn = 0;                    // nodes per leaf
  std::vector<double> off0, off1;  // node offsets from the leaf lower corner
  std::vector<double> w;           // node weights, summing to 1
  // value tables of leaf-normalized monomials at the nodes, [b * gn + q]
  std::vector<double> mrow, mcol;
  int rowB = 0, colB = 0;
};

// 1D near-cutoff pairs: the truncation eta has knots at radii delta, 2 delta,
// R, 2R, which break Gauss accuracy when they cross the cell.  Splitting both
// integrations at every knot-induced breakpoint restores piecewise-analytic
// integrands, so a fixed-order rule is accurate again.  block[(rb,cb)] is
// accumulated in physical coordinates.
void pair_block_1d_refined(const KernelSpec& k, const TruncationSpec& t, const QuadRule& q,
                           double xlo, double xhi, double ylo, double yhi, double hx,
                           double cx, double hy, double cy, int rowB, int colB,
                           double* block) {
  const double radii[4] = {t.delta, 2.0 * t.delta, t.R, 2.0 * t.R};
  std::vector<double> xb{xlo, xhi};
  for (double yb : {ylo, yhi})
    for (double r : radii)
      for (double s : {-1.0, 1.0}) {
        const double v = yb + s * r;
        if (v > xlo + 1e-15 && v < xhi - 1e-15) xb.push_back(v);
      }
  std::sort(xb.begin(), xb.end());
  const int G = static_cast<int>(q.nodes.size());
  for (std::size_t px = 0; px + 1 < xb.size(); ++px) {
    const double xa = xb[px], xc = xb[px + 1];
    const double xlen = xc - xa;
    if (xlen <= 0.0) continue;
    for (int qx = 0; qx < G; ++qx) {
      const double x = 0.5 * (xa + xc) + q.nodes[qx] * xlen;
      const double wx = q.weights[qx] * xlen;
      std::vector<double> yb2{ylo, yhi};
      for (double r : radii)
        for (double s : {-1.0, 1.0}) {
          const double v = x + s * r;
          if (v > ylo + 1e-15 && v < yhi - 1e-15) yb2.push_back(v);
        }
      std::sort(yb2.begin(), yb2.end());
      for (std::size_t py = 0; py + 1 < yb2.size(); ++py) {
        const double ya = yb2[py], yc = yb2[py + 1];
        const double ylen = yc - ya;
        if (ylen <= 0.0) continue;
        // skip pieces fully inside the inner cutoff or beyond the outer one
        const double dmid = std::abs(0.5 * (ya + yc) - x);
        if (dmid <= t.delta && std::abs(ya - x) <= t.delta + 1e-15 &&
            std::abs(yc - x) <= t.delta + 1e-15)
          continue;
        for (int qy = 0; qy < G; ++qy) {
          const double y = 0.5 * (ya + yc) + q.nodes[qy] * ylen;
          const double kv = eval_truncated(k, t, {x, 0.0}, {y, 0.0});
          if (kv == 0.0) continue;
          const double wxy = wx * q.weights[qy] * ylen;
          const double tx = (x - cx) / hx;
          const double ty = (y - cy) / hy;
          double xpow = 1.0;
          for (int rb = 0; rb < rowB; ++rb) {
            double ypow = 1.0;
            for (int cb = 0; cb < colB; ++cb) {
              block[static_cast<std::size_t>(rb) * colB + cb] += wxy * kv * xpow * ypow;
              ypow *= ty;
            }
            xpow *= tx;
          }
        }
      }
    }
  }
}

NodeTables make_tables(const Grid& g, int order, int row_kap, int col_kap) {
  const QuadRule& q = QuadRule::get(order);
  const int n = g.dim();
  NodeTables t;
  t.gn = n == 1 ? order : order * order;
  t.rowB = mcount(n, row_kap);
  t.colB = mcount(n, col_kap);
  t.off0.resize(t.gn);
  t.off1.resize(t.gn);
  t.w.resize(t.gn);
  const double h = g.leaf_side();
  std::vector<std::array<double, 2>> unit(t.gn);  // cube-normalized node coords
  if (n == 1) {
    for (int i = 0; i < order; ++i) {
      unit[i] = {q.nodes[i], 0.0};
      t.w[i] = q.weights[i];
      t.off0[i] = (q.nodes[i] + 0.5) * h;
      t.off1[i] = 0.0;
    }
  } else {
    int id = 0;
    for (int i = 0; i < order; ++i)
      for (int j = 0; j < order; ++j, ++id) {
        unit[id] = {q.nodes[i], q.nodes[j]};
        t.w[id] = q.weights[i] * q.weights[j];
        t.off0[id] = (q.nodes[i] + 0.5) * h;
        t.off1[id] = (q.nodes[j] + 0.5) * h;
      }
  }
  const auto fill = [&](std::vector<double>& dst, int kap, int B) {
    const auto& mon = monomials_below(n, kap);
    dst.assign(static_cast<std::size_t>(B) * t.gn, 0.0);
    for (int b = 0; b < B; ++b)
      for (int qid = 0; qid < t.gn; ++qid)
        dst[static_cast<std::size_t>(b) * t.gn + qid] =
            std::pow(unit[qid][0], mon[b].b[0]) *
            (n == 2 ? std::pow(unit[qid][1], mon[b].b[1]) : 1.0);
  };
  fill(t.mrow, row_kap, t.rowB);
  fill(t.mcol, col_kap, t.colB);
  return t;
}

}  // namespace

PolyOperator::PolyOperator(const KernelSpec& k, const TruncationSpec& t, const Measure& sigma,
                           const Measure& omega, int row_kap, int col_kap, int quad_order,
                           int threads)
    : k_(k),
      t_(t),
      sigma_(sigma),
      omega_(omega),
      row_kap_(row_kap),
      col_kap_(col_kap),
      rowB_(mcount(sigma.grid().dim(), row_kap)),
      colB_(mcount(sigma.grid().dim(), col_kap)),
      quad_order_(quad_order) {
  const Grid& g = sigma_.grid();
  if (omega_.grid().dim() != g.dim() || omega_.grid().depth() != g.depth())
    throw config_error("operator: sigma and omega grids must match");
  if (k_.family != KernelFamily::zero && t_.delta < 2.0 * g.leaf_diameter() - 1e-12)
    throw config_error("operator: singular quadrature (delta below 2 leaf diameters)");

  const std::int64_t N = g.leaf_count();
  rows_ = N * rowB_;
  cols_ = N * colB_;
  raw_.assign(static_cast<std::size_t>(rows_) * cols_, 0.0);
  if (k_.family == KernelFamily::zero) return;

  const NodeTables tab = make_tables(g, quad_order_, row_kap_, col_kap_);
  const int gn = tab.gn;
  const int n = g.dim();
  const double vol = std::pow(g.leaf_side(), n);
  const double vol2 = vol * vol;

  // Per-leaf absolute node coordinates.
  std::vector<double> nx0(N * gn), nx1(N * gn);
  for (std::int64_t i = 0; i < N; ++i) {
    const Box b = g.box(g.leaf_from_id(i));
    for (int q = 0; q < gn; ++q) {
      nx0[i * gn + q] = b.lo[0] + tab.off0[q];
      nx1[i * gn + q] = n == 2 ? b.lo[1] + tab.off1[q] : 0.0;
    }
  }

  parallel_rows(N, threads, [&](std::int64_t ilo, std::int64_t ihi) {
    std::vector<double> kbuf(gn);
    std::vector<double> sbuf(colB_);
    std::vector<double> block(static_cast<std::size_t>(rowB_) * colB_);
    for (std::int64_t i = ilo; i < ihi; ++i) {
      const double dens_w = omega_.density(i);
      if (dens_w == 0.0) continue;
      const Box bi = g.box(g.leaf_from_id(i));
      for (std::int64_t j = 0; j < N; ++j) {
        const double dens_s = sigma_.density(j);
        if (dens_s == 0.0) continue;
        const Box bj = g.box(g.leaf_from_id(j));
        double dmin, dmax;
        box_distances(bi, bj, n, &dmin, &dmax);
        if (dmax <= t_.delta || dmin >= 2.0 * t_.R) continue;
        const bool plateau = dmin >= 2.0 * t_.delta && dmax <= t_.R;
        std::fill(block.begin(), block.end(), 0.0);
        double scale = dens_s * dens_w;
        if (!plateau && n == 1) {
          pair_block_1d_refined(k_, t_, QuadRule::get(quad_order_), bi.lo[0], bi.hi[0],
                                bj.lo[0], bj.hi[0], bi.side(0), bi.center()[0], bj.side(0),
                                bj.center()[0], rowB_, colB_, block.data());
        } else {
          for (int qx = 0; qx < gn; ++qx) {
            const Point x{nx0[i * gn + qx], nx1[i * gn + qx]};
            simd::kernel_row(k_, t_, x, &nx0[j * gn], &nx1[j * gn], kbuf.data(), gn, plateau);
            for (int b = 0; b < colB_; ++b)
              sbuf[b] = simd::dot3(kbuf.data(), tab.w.data(),
                                   tab.mcol.data() + static_cast<std::size_t>(b) * gn, gn);
            for (int rb = 0; rb < rowB_; ++rb) {
              const double f = tab.w[qx] * tab.mrow[static_cast<std::size_t>(rb) * gn + qx];
              for (int b = 0; b < colB_; ++b)
                block[static_cast<std::size_t>(rb) * colB_ + b] += f * sbuf[b];
            }
          }
          scale *= vol2;
        }
        for (int rb = 0; rb < rowB_; ++rb) {
          double* dst = raw_.data() + (i * rowB_ + rb) * cols_ + j * colB_;
          const double* src = block.data() + static_cast<std::size_t>(rb) * colB_;
          for (int b = 0; b < colB_; ++b) dst[b] = scale * src[b];
        }
      }
    }
  });
}

void PolyOperator::apply_cols(const double* u, std::int64_t c0, std::int64_t c1,
                              double* y) const {
  for (std::int64_t r = 0; r < rows_; ++r)
    y[r] += simd::dot(row_ptr(r) + c0, u + c0, static_cast<std::size_t>(c1 - c0));
}

double PolyOperator::pair_ranges(const double* v, std::int64_t r0, std::int64_t r1,
                                 const double* u, std::int64_t c0, std::int64_t c1) const {
  double acc = 0.0;
  for (std::int64_t r = r0; r < r1; ++r) {
    if (v[r] == 0.0) continue;
    acc += v[r] * simd::dot(row_ptr(r) + c0, u + c0, static_cast<std::size_t>(c1 - c0));
  }
  return acc;
}

std::vector<double> PolyOperator::col_coeffs(const LeafPoly& u) const {
  if (u.kap() > col_kap_) throw config_error("operator: column degree bound exceeded");
  const std::int64_t N = grid().leaf_count();
  std::vector<double> out(cols_, 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    for (int b = 0; b < u.block(); ++b) out[i * colB_ + b] = u.leaf(i)[b];
  return out;
}

std::vector<double> PolyOperator::row_coeffs(const LeafPoly& v) const {
  if (v.kap() > row_kap_) throw config_error("operator: row degree bound exceeded");
  const std::int64_t N = grid().leaf_count();
  std::vector<double> out(rows_, 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    for (int b = 0; b < v.block(); ++b) out[i * rowB_ + b] = v.leaf(i)[b];
  return out;
}

DiscreteOperator DiscreteOperator::assemble(const KernelSpec& k, const TruncationSpec& t,
                                            const Measure& sigma, const Measure& omega,
                                            int quad_order, int threads) {
  return from_poly(PolyOperator(k, t, sigma, omega, 1, 1, quad_order, threads));
}

DiscreteOperator DiscreteOperator::from_poly(const PolyOperator& p) {
  DiscreteOperator op(p.kernel(), p.trunc(), p.sigma(), p.omega(), p.grid().leaf_count());
  op.quad_order_ = p.quad_order();
  const std::int64_t N = op.n_;
  op.raw_.assign(static_cast<std::size_t>(N) * N, 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    for (std::int64_t j = 0; j < N; ++j)
      op.raw_[i * N + j] = p.raw_at(i * p.rowB(), j * p.colB());
  return op;
}

DiscreteOperator DiscreteOperator::from_raw(const KernelSpec& k, const TruncationSpec& t,
                                            const Measure& sigma, const Measure& omega,
                                            std::vector<double> raw) {
  DiscreteOperator op(k, t, sigma, omega, sigma.grid().leaf_count());
  if (static_cast<std::int64_t>(raw.size()) != op.n_ * op.n_)
    throw config_error("operator: raw matrix has wrong shape");
  op.raw_ = std::move(raw);
  return op;
}

double DiscreteOperator::a(std::int64_t i, std::int64_t j) const {
  const double wi = omega_.leaf_mass(i), sj = sigma_.leaf_mass(j);
  if (wi == 0.0 || sj == 0.0) return 0.0;
  return raw(i, j) / (wi * sj);
}

std::vector<double> DiscreteOperator::apply(const std::vector<double>& f) const {
  if (static_cast<std::int64_t>(f.size()) != n_) throw config_error("operator: shape mismatch");
  std::vector<double> out(n_, 0.0);
  for (std::int64_t i = 0; i < n_; ++i) {
    const double wi = omega_.leaf_mass(i);
    if (wi == 0.0) continue;
    out[i] = simd::dot(raw_.data() + i * n_, f.data(), n_) / wi;
  }
  return out;
}

double DiscreteOperator::pairing(const std::vector<double>& f, const std::vector<double>& g) const {
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_; ++i) {
    if (g[i] == 0.0) continue;
    acc += g[i] * simd::dot(raw_.data() + i * n_, f.data(), n_);
  }
  return acc;
}

DiscreteOperator DiscreteOperator::adjoint() const {
  DiscreteOperator op(k_.adjoint(), t_, omega_, sigma_, n_);
  op.quad_order_ = quad_order_;
  op.raw_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  for (std::int64_t i = 0; i < n_; ++i)
    for (std::int64_t j = 0; j < n_; ++j) op.raw_[i * n_ + j] = raw_[j * n_ + i];
  return op;
}

namespace {

Eigen::MatrixXd weighted_matrix(const DiscreteOperator& op) {
  const std::int64_t N = op.leaves();
  Eigen::MatrixXd M(N, N);
  for (std::int64_t i = 0; i < N; ++i) {
    const double wi = op.omega().leaf_mass(i);
    for (std::int64_t j = 0; j < N; ++j) {
      const double sj = op.sigma().leaf_mass(j);
      M(i, j) = (wi > 0.0 && sj > 0.0) ? op.raw(i, j) / std::sqrt(wi * sj) : 0.0;
    }
  }
  return M;
}

}  // namespace

double DiscreteOperator::norm_svd() const {
  Eigen::MatrixXd M = weighted_matrix(*this);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

double DiscreteOperator::norm_power(double tol, int max_iter) const {
  Eigen::MatrixXd M = weighted_matrix(*this);
  const std::int64_t N = n_;
  Eigen::VectorXd v(N);
  for (std::int64_t i = 0; i < N; ++i) v(i) = 1.0 + static_cast<double>(i) / (2.0 * N);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd u = M * v;
    Eigen::VectorXd w = M.transpose() * u;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double lam_new = u.squaredNorm();  // Rayleigh quotient of M^T M at unit v
    w /= nw;
    const bool converged = it > 0 && std::abs(lam_new - lam) <= tol * std::max(lam_new, 1e-300);
    lam = lam_new;
    v = w;
    if (converged) return std::sqrt(lam);
  }
  throw numeric_error("power iteration did not converge; last value " + std::to_string(std::sqrt(lam)));
}

double DiscreteOperator::operator_norm() const {
  return n_ <= 4096 ? norm_svd() : norm_power();
}

void DiscreteOperator::dump_binary(std::ostream& os) const {
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(n_), static_cast<std::uint64_t>(n_)};
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<double> row(n_);
  for (std::int64_t i = 0; i < n_; ++i) {
    for (std::int64_t j = 0; j < n_; ++j) row[j] = a(i, j);
    os.write(reinterpret_cast<const char*>(row.data()), sizeof(double) * n_);
  }
}

}  // namespace twlab
