#include "twlab/forms.hpp"

#include <map>

#include "twlab/simd.hpp"

namespace twlab {

namespace {

struct PairContext {
  const Grid* g = nullptr;
  const PolyOperator* op = nullptr;
  std::vector<std::vector<std::int64_t>> leaves;  // per cube id
  std::vector<LeafPoly> df;                       // detail of f per cube id
  std::vector<LeafPoly> dg;                       // detail of g per cube id
  std::vector<char> has_f, has_g;
  std::vector<std::vector<double>> ychild;  // per cube id: 2^n stacked row images
  std::map<std::int64_t, std::vector<double>> windicator;

  // raw * (column coefficients of 1_C), cached per cube.
  const std::vector<double>& w_of(const Cube& C) {
    const std::int64_t id = g->cube_id(C);
    auto it = windicator.find(id);
    if (it != windicator.end()) return it->second;
    std::vector<double> u(op->cols(), 0.0);
    for (std::int64_t j : leaves[id]) u[j * op->colB()] = 1.0;
    std::vector<double> y(op->rows(), 0.0);
    if (g->dim() == 1) {
      const std::int64_t c0 = leaves[id].front() * op->colB();
      const std::int64_t c1 = (leaves[id].back() + 1) * op->colB();
      op->apply_cols(u.data(), c0, c1, y.data());
    } else {
      op->apply_cols(u.data(), 0, op->cols(), y.data());
    }
    return windicator.emplace(id, std::move(y)).first->second;
  }

  // dot of a row image with the local row coefficients of a detail on J
  double dot_rows(const std::vector<double>& y, std::size_t offset, const Cube& J,
                  const LeafPoly& psi) const {
    const int rowB = op->rowB();
    double acc = 0.0;
    for (std::int64_t id : leaves[g->cube_id(J)]) {
      const double* c = psi.leaf(id);
      const double* yr = y.data() + offset + id * rowB;
      for (int b = 0; b < psi.block(); ++b) acc += c[b] * yr[b];
    }
    return acc;
  }

  // same, against the pointwise product (m * psi) formed leaf by leaf on J
  double dot_rows_product(const std::vector<double>& y, const Cube& J, const LeafPoly& m,
                          const LeafPoly& psi) const {
    const int n = g->dim();
    const int rowB = op->rowB();
    const auto& ma = monomials_below(n, m.kap());
    const auto& mb = monomials_below(n, psi.kap());
    double acc = 0.0;
    for (std::int64_t id : leaves[g->cube_id(J)]) {
      const double* a = m.leaf(id);
      const double* b = psi.leaf(id);
      const double* yr = y.data() + id * rowB;
      for (int ai = 0; ai < m.block(); ++ai) {
        if (a[ai] == 0.0) continue;
        for (int bi = 0; bi < psi.block(); ++bi) {
          if (b[bi] == 0.0) continue;
          acc += a[ai] * b[bi] *
                 yr[mpos(n, ma[ai].b[0] + mb[bi].b[0], ma[ai].b[1] + mb[bi].b[1])];
        }
      }
    }
    return acc;
  }

  double term(std::int64_t iid, std::int64_t jid, const Cube& J, int nchild) const {
    double t = 0.0;
    for (int w = 0; w < nchild; ++w)
      t += dot_rows(ychild[iid], static_cast<std::size_t>(w) * op->rows(), J, dg[jid]);
    return t;
  }
};

}  // namespace

FormLedger compute_ledger(const PolyOperator& op, const AlpertSystem& fsys,
                          const AlpertSystem& gsys, const std::vector<double>& f,
                          const std::vector<double>& g, const CoronaTree& tree,
                          const ShiftedCorona& shift, const GoodnessConfig& cfg,
                          bool restrict_good, const FormConstants& consts) {
  const Grid& gr = op.grid();
  const int n = gr.dim();
  const int nchild = 1 << n;
  const int kappa = fsys.kappa();
  if (gsys.kappa() != kappa) throw config_error("forms: mismatched expansion orders");
  if (op.col_kap() < kappa || op.row_kap() < 2 * kappa - 1)
    throw config_error("forms: operator degrees too small for the splittings");

  FormLedger led;
  const auto fhat = fsys.transform_values(f);
  const auto ghat = gsys.transform_values(g);
  const LeafPoly fl = LeafPoly::from_leaf_values(gr, f);
  const LeafPoly gl = LeafPoly::from_leaf_values(gr, g);
  WeightedMomentTree Nf(fsys.measure(), fl, kappa);

  PairContext cx;
  cx.g = &gr;
  cx.op = &op;
  const auto cubes = gr.all_cubes();
  const std::int64_t nc = gr.cube_count();
  cx.leaves.resize(nc);
  cx.has_f.assign(nc, 0);
  cx.has_g.assign(nc, 0);
  cx.df.assign(nc, LeafPoly(gr, 1));
  cx.dg.assign(nc, LeafPoly(gr, 1));
  cx.ychild.resize(nc);
  for (const Cube& c : cubes)
    gr.for_each_leaf(c, [&](std::int64_t j) { cx.leaves[gr.cube_id(c)].push_back(j); });

  std::vector<double> ubuf(op.cols(), 0.0);
  for (const Cube& I : cubes) {
    if (gr.is_leaf(I)) continue;
    const std::int64_t id = gr.cube_id(I);
    if (fsys.wavelets(I).dim > 0) {
      LeafPoly d(gr, kappa);
      fsys.add_delta(d, fhat, I);
      cx.df[id] = std::move(d);
      cx.has_f[id] = 1;
      cx.ychild[id].assign(static_cast<std::size_t>(nchild) * op.rows(), 0.0);
      for (int w = 0; w < nchild; ++w) {
        const Cube ch = gr.child(I, w);
        const auto& chl = cx.leaves[gr.cube_id(ch)];
        for (std::int64_t j : chl)
          for (int b = 0; b < cx.df[id].block(); ++b)
            ubuf[j * op.colB() + b] = cx.df[id].leaf(j)[b];
        double* y = cx.ychild[id].data() + static_cast<std::size_t>(w) * op.rows();
        if (n == 1) {
          op.apply_cols(ubuf.data(), chl.front() * op.colB(), (chl.back() + 1) * op.colB(), y);
        } else {
          op.apply_cols(ubuf.data(), 0, op.cols(), y);
        }
        for (std::int64_t j : chl)
          std::fill(ubuf.begin() + j * op.colB(), ubuf.begin() + (j + 1) * op.colB(), 0.0);
      }
    }
    if (gsys.wavelets(I).dim > 0) {
      LeafPoly d(gr, kappa);
      gsys.add_delta(d, ghat, I);
      cx.dg[id] = std::move(d);
      cx.has_g[id] = 1;
    }
  }

  // ---- pairing via the leaf matrix and via the full expansion ----
  std::vector<std::int64_t> fids, gids;
  for (const Cube& c : cubes) {
    if (cx.has_f[gr.cube_id(c)]) fids.push_back(gr.cube_id(c));
    if (cx.has_g[gr.cube_id(c)]) gids.push_back(gr.cube_id(c));
  }
  std::vector<double> term(static_cast<std::size_t>(nc) * nc, 0.0);
  double detail = 0.0;
  for (std::int64_t iid : fids)
    for (std::int64_t jid : gids) {
      const double t = cx.term(iid, jid, gr.cube_from_id(jid), nchild);
      term[static_cast<std::size_t>(iid) * nc + jid] = t;
      detail += t;
    }
  led.detail_part = detail;

  {
    const auto fc = op.col_coeffs(fl);
    const auto gc = op.row_coeffs(gl);
    led.pairing_matrix = op.pair_ranges(gc.data(), 0, op.rows(), fc.data(), 0, op.cols());

    LeafPoly ef(gr, kappa), eg(gr, kappa);
    const auto pf = fsys.coarse_poly(gr.root(), Nf);
    ef.add_on_cube(gr.root(), pf.data(), kappa);
    WeightedMomentTree Ng(gsys.measure(), gl, kappa);
    const auto pg = gsys.coarse_poly(gr.root(), Ng);
    eg.add_on_cube(gr.root(), pg.data(), kappa);
    LeafPoly wavf(gr, kappa), wavg(gr, kappa);
    for (std::int64_t id : fids) wavf.add_scaled(cx.df[id], 1.0);
    for (std::int64_t id : gids) wavg.add_scaled(cx.dg[id], 1.0);
    const auto uef = op.col_coeffs(ef);
    const auto uwf = op.col_coeffs(wavf);
    const auto veg = op.row_coeffs(eg);
    const auto vwg = op.row_coeffs(wavg);
    const double c1 = op.pair_ranges(vwg.data(), 0, op.rows(), uef.data(), 0, op.cols());
    const double c2 = op.pair_ranges(veg.data(), 0, op.rows(), uwf.data(), 0, op.cols());
    const double c3 = op.pair_ranges(veg.data(), 0, op.rows(), uef.data(), 0, op.cols());
    led.pairing_expanded = detail + c1 + c2 + c3;
  }

  std::vector<char> good(nc, 1);
  if (restrict_good)
    for (const Cube& c : cubes) good[gr.cube_id(c)] = is_good(gr, c, cfg) ? 1 : 0;

  // ---- size splitting and canonical buckets over the pair terms ----
  const auto& stops = tree.stops();
  led.blocks.resize(stops.size());
  for (std::size_t s = 0; s < stops.size(); ++s) led.blocks[s].stop = static_cast<int>(s);
  std::vector<double> diag_block(stops.size(), 0.0);

  struct DeepPair {
    Cube I, J;
    double term;
  };
  std::vector<DeepPair> deep;

  for (std::int64_t iid : fids) {
    const Cube I = gr.cube_from_id(iid);
    if (restrict_good && !good[iid]) continue;
    for (std::int64_t jid : gids) {
      const Cube J = gr.cube_from_id(jid);
      if (restrict_good && !good[jid]) continue;
      const double t = term[static_cast<std::size_t>(iid) * nc + jid];

      const bool j_deep_in_i = is_deeply_embedded(gr, J, I, cfg.rho, cfg.eps);
      const bool i_deep_in_j = is_deeply_embedded(gr, I, J, cfg.rho, cfg.eps);
      const bool disjoint = gr.box(I).disjoint(gr.box(J), n);
      const bool far_ratio = std::abs(J.level - I.level) > cfg.rho;
      if (j_deep_in_i) {
        led.size.below += t;
        ++led.size.below_pairs;
      } else if (i_deep_in_j) {
        led.size.above += t;
      } else if (disjoint && far_ratio) {
        led.size.disjoint_far += t;
      } else {
        led.size.comparable += t;
      }

      // canonical buckets live on the deep-below pairs
      if (j_deep_in_i) {
        const int F = tree.corona_of(I);
        const int G = shift.home[jid];
        if (G < 0) {
          ++led.homeless_deep_pairs;
        } else if (G == F) {
          led.canonical.diagonal += t;
          diag_block[F] += t;
        } else if (gr.contains(stops[F].cube, stops[G].cube)) {
          // far below: the detail home sits strictly inside the corona of I
        } else if (gr.contains(stops[G].cube, stops[F].cube)) {
          led.canonical.far_above += t;
          ++led.canonical.far_above_pairs;
        } else {
          led.canonical.disjoint += t;
          ++led.canonical.disjoint_pairs;
        }
        deep.push_back({I, J, t});
        led.blocks[F].block += t;
        led.blocks[F].pairs += 1;
      }

      // the two-sided decomposition of the far-below form over nested pairs
      const int G = shift.home[jid];
      if (G >= 0 && gr.contains(I, stops[G].cube) && I != stops[G].cube) {
        led.canonical.far_below_1 += t;
        if (!j_deep_in_i) led.canonical.far_below_2 += t;
      }
    }
  }
  led.canonical.far_below = led.canonical.far_below_1 - led.canonical.far_below_2;

  // ---- local splitting of each deep pair ----
  std::map<std::pair<std::int64_t, int>, Cube> flat_cache;  // (J id, stop) -> I_J flat
  for (const DeepPair& p : deep) {
    const std::int64_t iid = gr.cube_id(p.I);
    const std::int64_t jid = gr.cube_id(p.J);
    const int F = tree.corona_of(p.I);
    BlockParts& blk = led.blocks[F];
    const int cslot = gr.child_slot(p.I, p.J);
    const Cube IJ = gr.child(p.I, cslot);
    const double home =
        cx.dot_rows(cx.ychild[iid], static_cast<std::size_t>(cslot) * op.rows(), p.J, cx.dg[jid]);
    const double neighbour = p.term - home;

    // smallest corona cube above J that J embeds deeply into, and its child
    Cube flat;
    const auto key = std::make_pair(jid, F);
    auto it = flat_cache.find(key);
    if (it != flat_cache.end()) {
      flat = it->second;
    } else {
      Cube natural = p.I;
      for (int lvl = p.J.level - 1; lvl >= stops[F].cube.level; --lvl) {
        const Cube K = gr.ancestor(p.J, lvl);
        if (tree.corona_of(K) == F && is_deeply_embedded(gr, p.J, K, cfg.rho, cfg.eps)) {
          natural = K;
          break;
        }
      }
      flat = gr.ancestor(p.J, natural.level + 1);
      flat_cache.emplace(key, flat);
    }

    const auto& wF = cx.w_of(stops[F].cube);
    const auto& wIJ = cx.w_of(IJ);
    LeafPoly m = cx.df[iid].restricted(IJ);
    const double para = cx.dot_rows_product(wF, p.J, m, cx.dg[jid]);
    const double s2 = cx.dot_rows_product(wIJ, p.J, m, cx.dg[jid]);
    const double stop_form = s2 - para;
    const double comm = home - s2;

    if (tree.corona_of(flat) == F && tree.stop_index(flat) < 0) {
      blk.paraproduct_corona += para;
    } else {
      blk.paraproduct_stopping += para;
    }
    blk.stop_form += stop_form;
    blk.commutator += comm;
    blk.neighbour += neighbour;
    blk.residual += std::abs(para + stop_form + comm + neighbour - p.term);
  }

  for (auto& blk : led.blocks) {
    led.blocks_total += blk.block;
    led.commutator_total += blk.commutator;
  }

  // ---- recorded bound ratios ----
  double fnorm2 = 0.0, gnorm2 = 0.0;
  for (std::int64_t i = 0; i < gr.leaf_count(); ++i) {
    fnorm2 += f[i] * f[i] * fsys.measure().leaf_mass(i);
    gnorm2 += g[i] * g[i] * gsys.measure().leaf_mass(i);
  }
  const double envelope =
      (consts.pivotal + std::sqrt(consts.a2) + consts.testing_kappa) * std::sqrt(fnorm2) *
      std::sqrt(gnorm2);
  if (envelope > 0.0)
    led.canonical.intertwining_ratio = std::abs(led.canonical.far_below_1) / envelope;

  for (std::size_t s = 0; s < stops.size(); ++s) {
    BlockParts& blk = led.blocks[s];
    // detail energies of the corona and its shifted partner
    double pf2 = 0.0;
    for (std::int64_t iid : fids)
      if (tree.corona_of(gr.cube_from_id(iid)) == static_cast<int>(s)) {
        const double* src = fhat.wav.data() + fsys.wavelet_offset(gr.cube_from_id(iid));
        for (int a = 0; a < fsys.wavelets(gr.cube_from_id(iid)).dim; ++a)
          pf2 += src[a] * src[a];
      }
    double pg2 = 0.0;
    for (const Cube& J : shift.members[s]) {
      const double* src = ghat.wav.data() + gsys.wavelet_offset(J);
      for (int a = 0; a < gsys.wavelets(J).dim; ++a) pg2 += src[a] * src[a];
    }
    const double fs = fsys.measure().mass(stops[s].cube);
    const double den = (consts.testing + std::sqrt(consts.a2)) *
                       (stops[s].alpha_f * std::sqrt(fs) + std::sqrt(pf2)) * std::sqrt(pg2);
    if (den > 0.0) {
      blk.bound_ratio = std::abs(diag_block[s]) / den;
      led.below_bound_ratio_max = std::max(led.below_bound_ratio_max, blk.bound_ratio);
    }

    // almost-orthogonality of the telescoped-polynomial sums
    if (stops[s].alpha_f > 0.0 && pg2 > 0.0) {
      const Cube F = stops[s].cube;
      const auto pF = fsys.coarse_poly(F, Nf);
      LeafPoly sum_corona(gr, 2 * kappa - 1), sum_stopping(gr, 2 * kappa - 1);
      double den_c = 0.0, den_s = 0.0;
      for (const Cube& J : shift.members[s]) {
        const std::int64_t jid = gr.cube_id(J);
        if (!cx.has_g[jid]) continue;
        // smallest deep-embedding corona ancestor, as in the pair loop
        Cube natural{-1, {0, 0}};
        for (int lvl = J.level - 1; lvl >= F.level; --lvl) {
          const Cube K = gr.ancestor(J, lvl);
          if (tree.corona_of(K) == static_cast<int>(s) &&
              is_deeply_embedded(gr, J, K, cfg.rho, cfg.eps)) {
            natural = K;
            break;
          }
        }
        if (natural.level < 0) continue;  // no deep partner: no telescoped polynomial
        const Cube flat = gr.ancestor(J, natural.level + 1);
        LeafPoly pj(gr, kappa);
        const auto pflat = fsys.coarse_poly(flat, Nf);
        pj.add_on_cube(flat, pflat.data(), kappa);
        LeafPoly ptop(gr, kappa);
        ptop.add_on_cube(F, pF.data(), kappa);
        pj.add_scaled(ptop, -1.0);
        pj.restrict_to(J);
        // scale by 1/alpha_F and multiply by the detail of g on J
        LeafPoly prod = pj.multiplied(cx.dg[jid]);
        const bool corona_case =
            tree.corona_of(flat) == static_cast<int>(s) && tree.stop_index(flat) < 0;
        double jg2 = 0.0;
        const double* src = ghat.wav.data() + gsys.wavelet_offset(J);
        for (int a = 0; a < gsys.wavelets(J).dim; ++a) jg2 += src[a] * src[a];
        if (corona_case) {
          sum_corona.add_scaled(prod, 1.0 / stops[s].alpha_f);
          den_c += jg2;
        } else {
          sum_stopping.add_scaled(prod, 1.0 / stops[s].alpha_f);
          den_s += jg2;
        }
      }
      if (den_c > 0.0)
        blk.almost_orth_corona = sum_corona.norm2(gsys.measure()) / den_c;
      if (den_s > 0.0)
        blk.almost_orth_stopping = sum_stopping.norm2(gsys.measure()) / den_s;
      led.almost_orth_ratio_max = std::max(
          {led.almost_orth_ratio_max, blk.almost_orth_corona, blk.almost_orth_stopping});
    }
  }

  return led;
}

}  // namespace twlab
