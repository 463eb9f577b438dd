#include "twlab/lab.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "twlab/simd.hpp"

namespace twlab {

using nlohmann::json;

namespace {

json cube_json(const Cube& c) { return json::array({c.level, c.idx[0], c.idx[1]}); }

json witness_json(const Witness& w) {
  json j;
  j["kind"] = w.kind;
  if (!w.cubes.empty()) {
    json arr = json::array();
    for (const Cube& c : w.cubes) arr.push_back(cube_json(c));
    j["cubes"] = arr;
  }
  if (w.kind == "box" || w.kind == "shell") {
    j["box"] = {{"lo", {w.box.lo[0], w.box.lo[1]}}, {"hi", {w.box.hi[0], w.box.hi[1]}}};
  }
  if (w.a != 0.0) j["a"] = w.a;
  if (w.b != 0.0) j["b"] = w.b;
  if (w.clipped) j["clipped"] = true;
  return j;
}

json value_json(const ConstantValue& v) {
  return json{{"value", v.value}, {"witness", witness_json(v.witness)}};
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  return std::to_string(
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c;
  const auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  get("dimension", c.dim);
  get("depth", c.depth);
  if (j.contains("origin")) {
    auto o = j.at("origin").get<std::vector<double>>();
    for (std::size_t k = 0; k < o.size() && k < 2; ++k) c.origin[k] = o[k];
  }
  get("side", c.side);
  get("beta_sigma", c.beta_sigma);
  get("beta_omega", c.beta_omega);
  get("seeds", c.seeds);
  get("sigma_file", c.sigma_file);
  get("omega_file", c.omega_file);
  get("family", c.family);
  get("alpha", c.alpha);
  get("riesz_component", c.riesz_component);
  get("kappa", c.kappa);
  get("quad_order", c.quad_order);
  get("trunc_delta_factor", c.trunc_delta_factor);
  get("trunc_radius_factor", c.trunc_radius_factor);
  get("gamma", c.gamma);
  if (j.contains("goodness")) {
    const auto& gj = j.at("goodness");
    if (gj.contains("r")) c.goodness.r = gj.at("r").get<int>();
    if (gj.contains("eps")) c.goodness.eps = gj.at("eps").get<double>();
    if (gj.contains("tau")) c.goodness.tau = gj.at("tau").get<int>();
    if (gj.contains("rho")) c.goodness.rho = gj.at("rho").get<int>();
  }
  get("with_poly_testing", c.with_poly_testing);
  get("with_wbp", c.with_wbp);
  get("with_cancellation", c.with_cancellation);
  get("with_profiles", c.with_profiles);
  get("pivotal_kappas", c.pivotal_kappas);
  get("profile_delta_full", c.profile_delta_full);
  get("threads", c.threads);
  c.validate();
  return c;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["dimension"] = dim;
  j["depth"] = depth;
  j["origin"] = std::vector<double>(origin.begin(), origin.begin() + dim);
  j["side"] = side;
  j["beta_sigma"] = beta_sigma;
  j["beta_omega"] = beta_omega;
  j["seeds"] = seeds;
  if (!sigma_file.empty()) j["sigma_file"] = sigma_file;
  if (!omega_file.empty()) j["omega_file"] = omega_file;
  j["family"] = family;
  j["alpha"] = alpha;
  j["riesz_component"] = riesz_component;
  j["kappa"] = kappa;
  j["quad_order"] = quad_order;
  j["gamma"] = gamma;
  j["goodness"] = {{"r", goodness.r}, {"eps", goodness.eps}, {"tau", goodness.tau},
                   {"rho", goodness.rho}};
  j["pivotal_kappas"] = pivotal_kappas;
  j["profile_delta_full"] = profile_delta_full;
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  if (dim != 1 && dim != 2) throw config_error("config: dimension must be 1 or 2");
  if (depth < 2 || depth > 12) throw config_error("config: depth out of range");
  if (seeds.empty()) throw config_error("config: at least one seed required");
  if (kappa < 1 || kappa > 4) throw config_error("config: kappa must lie in 1..4");
  goodness.validate_for(dim, kappa, alpha);
  if (!(gamma > 1.0)) throw config_error("config: gamma must exceed 1");
  family_from_name(family);
}

Instance ExperimentConfig::instance(std::uint64_t seed) const {
  const Grid g = grid();
  Instance in{
      sigma_file.empty() ? random_doubling(g, beta_sigma, seed)
                         : Measure::from_json(slurp(sigma_file)),
      omega_file.empty() ? random_doubling(g, beta_omega, seed ^ 0x9E3779B97F4A7C15ULL)
                         : Measure::from_json(slurp(omega_file)),
      KernelSpec::make(family_from_name(family), dim, alpha, riesz_component),
      TruncationSpec::for_grid(g, kappa, trunc_delta_factor, trunc_radius_factor),
      kappa,
      quad_order,
      goodness,
      gamma,
      seed,
      beta_sigma};
  return in;
}

ConstantsReport compute_constants(const Instance& in) {
  ConstantsReport rep;
  rep.seed = in.seed;
  rep.beta = in.beta;
  const double alpha = in.kernel.alpha;
  rep.a2 = muckenhoupt_a2(in.sigma, in.omega, alpha);
  rep.a2_dyadic = muckenhoupt_a2(in.sigma, in.omega, alpha, true);

  auto op = DiscreteOperator::assemble(in.kernel, in.trunc, in.sigma, in.omega, in.quad_order);
  auto adj = op.adjoint();
  rep.testing = cube_testing(op);
  rep.testing_dual = cube_testing(adj);
  rep.norm = op.operator_norm();
  rep.ellipticity =
      in.kernel.elliptic
          ? ellipticity_constant(in.kernel, in.trunc, 2.0 * in.trunc.delta, in.trunc.R, 128)
          : 0.0;

  PolyOperator pop(in.kernel, in.trunc, in.sigma, in.omega, 2 * in.kappa - 1, in.kappa,
                   in.quad_order);
  PolyOperator pop_dual(in.kernel.adjoint(), in.trunc, in.omega, in.sigma, 2 * in.kappa - 1,
                        in.kappa, in.quad_order);
  rep.testing_kappa = cube_testing_poly(pop, in.kappa, false);
  rep.testing_kappa_dual = cube_testing_poly(pop_dual, in.kappa, false);
  rep.testing_triple = cube_testing_poly(pop, in.kappa, true);
  rep.testing_triple_dual = cube_testing_poly(pop_dual, in.kappa, true);
  rep.wbp = wbp_constant(pop, in.kappa, in.kappa);

  rep.pivotal = pivotal_constant(in.sigma, in.omega, alpha, in.kappa);
  rep.pivotal_dual = pivotal_constant(in.omega, in.sigma, alpha, in.kappa);

  rep.cancel_cube =
      cancellation_constant(in.kernel, in.sigma, in.omega, AnnulusNorm::cube, in.quad_order);
  rep.cancel_euclid =
      cancellation_constant(in.kernel, in.sigma, in.omega, AnnulusNorm::euclid, in.quad_order);
  rep.cancel_cube_dual = cancellation_constant(in.kernel.adjoint(), in.omega, in.sigma,
                                               AnnulusNorm::cube, in.quad_order);

  rep.profile_ball = b_testing(op, TestProfile::ball);
  rep.profile_halfwidth = b_testing(op, TestProfile::halfwidth);
  rep.profile_ball_full = b_testing(op, TestProfile::ball, 0.5);

  const auto ss = doubling_stats(in.sigma);
  const auto sw = doubling_stats(in.omega);
  rep.doubling_sigma = ss.c_doub;
  rep.doubling_omega = sw.c_doub;
  rep.theta_sigma = ss.theta_rev;
  rep.theta_omega = sw.theta_rev;
  return rep;
}

std::string ConstantsReport::to_json(bool with_timestamp) const {
  json j;
  j["seed"] = seed;
  j["beta"] = beta;
  j["a2"] = value_json(a2);
  j["a2_dyadic"] = value_json(a2_dyadic);
  j["testing"] = value_json(testing);
  j["testing_dual"] = value_json(testing_dual);
  j["testing_kappa"] = value_json(testing_kappa);
  j["testing_kappa_dual"] = value_json(testing_kappa_dual);
  j["testing_triple"] = value_json(testing_triple);
  j["testing_triple_dual"] = value_json(testing_triple_dual);
  j["pivotal"] = {{"value", pivotal.value},
                  {"ambient", cube_json(pivotal.ambient)},
                  {"antichain_size", pivotal.antichain.size()}};
  j["pivotal_dual"] = {{"value", pivotal_dual.value},
                       {"ambient", cube_json(pivotal_dual.ambient)},
                       {"antichain_size", pivotal_dual.antichain.size()}};
  j["wbp"] = value_json(wbp);
  j["cancellation_cube"] = value_json(cancel_cube);
  j["cancellation_euclid"] = value_json(cancel_euclid);
  j["cancellation_cube_dual"] = value_json(cancel_cube_dual);
  j["profile_ball"] = value_json(profile_ball);
  j["profile_halfwidth"] = value_json(profile_halfwidth);
  j["profile_ball_full"] = value_json(profile_ball_full);
  j["norm"] = norm;
  j["ellipticity"] = ellipticity;
  j["doubling_sigma"] = doubling_sigma;
  j["doubling_omega"] = doubling_omega;
  j["theta_sigma"] = theta_sigma;
  j["theta_omega"] = theta_omega;
  if (with_timestamp) j["generated_at"] = timestamp_now();
  return j.dump(2);
}

void ConstantsReport::write_csv_header(std::ostream& os) {
  os << "seed,beta,a2,a2_dyadic,testing,testing_dual,testing_kappa,testing_kappa_dual,"
        "testing_triple,testing_triple_dual,pivotal,pivotal_dual,wbp,cancel_cube,"
        "cancel_euclid,cancel_cube_dual,profile_ball,profile_halfwidth,profile_ball_full,"
        "norm,ellipticity,doubling_sigma,doubling_omega,theta_sigma,theta_omega\n";
}

void ConstantsReport::write_csv_row(std::ostream& os) const {
  os.precision(17);
  os << seed << ',' << beta << ',' << a2.value << ',' << a2_dyadic.value << ',' << testing.value
     << ',' << testing_dual.value << ',' << testing_kappa.value << ','
     << testing_kappa_dual.value << ',' << testing_triple.value << ','
     << testing_triple_dual.value << ',' << pivotal.value << ',' << pivotal_dual.value << ','
     << wbp.value << ',' << cancel_cube.value << ',' << cancel_euclid.value << ','
     << cancel_cube_dual.value << ',' << profile_ball.value << ',' << profile_halfwidth.value
     << ',' << profile_ball_full.value << ',' << norm << ',' << ellipticity << ','
     << doubling_sigma << ',' << doubling_omega << ',' << theta_sigma << ',' << theta_omega
     << '\n';
}

void VerificationReport::add(const std::string& name, double value, double tol) {
  VerificationRow row{name, value, tol, tol <= 0.0 || value <= tol};
  ok = ok && row.pass;
  rows.push_back(row);
}

std::string VerificationReport::to_json(bool with_timestamp) const {
  json j;
  j["ok"] = ok;
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"name", r.name}, {"value", r.value}, {"tol", r.tol}, {"pass", r.pass}});
  j["checks"] = arr;
  if (with_timestamp) j["generated_at"] = timestamp_now();
  return j.dump(2);
}

VerificationReport run_verification(const Instance& in, bool corrupt_basis) {
  VerificationReport rep;
  const Grid& g = in.sigma.grid();
  const int kappa = in.kappa;
  AlpertSystem fsys(in.sigma, kappa);
  AlpertSystem gsys(in.omega, kappa);
  if (corrupt_basis) fsys.corrupt_for_testing(1e-3);

  for (const AlpertSystem* sys : {&fsys, &gsys}) {
    const Measure& mu = sys->measure();
    const std::string tag = sys == &fsys ? "sigma" : "omega";
    MomentTree mom(mu, 2 * kappa - 1);
    double ortho = 0.0, moment = 0.0;
    const auto& mon = monomials_below(g.dim(), kappa);
    const int B = sys->B();
    for (const Cube& c : g.all_cubes()) {
      if (g.is_leaf(c)) continue;
      const auto& wb = sys->wavelets(c);
      if (wb.dim == 0) continue;
      const auto G = frame_gram(g, mom, c, kappa);
      const int F = wb.frame;
      for (int a = 0; a < wb.dim; ++a)
        for (int b = 0; b < wb.dim; ++b) {
          double ip = 0.0;
          for (int i = 0; i < F; ++i) {
            if (wb.row(a)[i] == 0.0) continue;
            for (int j = 0; j < F; ++j)
              ip += wb.row(a)[i] * G[static_cast<std::size_t>(i) * F + j] * wb.row(b)[j];
          }
          ortho = std::max(ortho, std::abs(ip - (a == b ? 1.0 : 0.0)));
        }
      const int nc = 1 << g.dim();
      for (int gi = 0; gi < B; ++gi) {
        for (int a = 0; a < wb.dim; ++a) {
          double m = 0.0;
          for (int w = 0; w < nc; ++w) {
            const Cube ch = g.child(c, w);
            const double* M = mom.at(g, ch);
            const auto R = reexpand_matrix(g, c, ch, kappa);
            for (int b = 0; b < B; ++b) {
              if (wb.row(a)[w * B + b] == 0.0) continue;
              double inner = 0.0;
              for (int t = 0; t < B; ++t)
                inner += R[static_cast<std::size_t>(gi) * B + t] *
                         M[mpos(g.dim(), mon[t].b[0] + mon[b].b[0], mon[t].b[1] + mon[b].b[1])];
              m += wb.row(a)[w * B + b] * inner;
            }
          }
          moment = std::max(moment, std::abs(m));
        }
      }
    }
    rep.add("orthonormality/" + tag, ortho, 1e-9);
    rep.add("moment_vanishing/" + tag, moment, 1e-10);

    SplitMix64 rng(in.seed + (sys == &fsys ? 11 : 13));
    std::vector<double> f(g.leaf_count());
    for (auto& x : f) x = rng.next_in(-1.0, 1.0);
    LeafPoly fp = LeafPoly::from_leaf_values(g, f, kappa);
    const double f2 = fp.norm2(mu);
    const auto co = sys->transform(fp);
    rep.add("parseval/" + tag, std::abs(sys->coeff_norm2(co) - f2) / std::max(f2, 1e-300), 1e-9);
    LeafPoly recon = sys->reconstruct(co);
    recon.add_scaled(fp, -1.0);
    rep.add("round_trip/" + tag, std::sqrt(recon.norm2(mu) / std::max(f2, 1e-300)), 1e-9);

    WeightedMomentTree N(mu, fp, kappa);
    double tele = 0.0;
    for (int rep_i = 0; rep_i < 4; ++rep_i) {
      Cube Q;
      Q.level = 1 + static_cast<int>(rng.next_u64() % (g.depth() - 1));
      for (int k = 0; k < g.dim(); ++k)
        Q.idx[k] = static_cast<std::int32_t>(rng.next_u64() % g.cells_per_axis(Q.level));
      const Cube P = g.ancestor(Q, static_cast<int>(rng.next_u64() % Q.level));
      LeafPoly lhs(g, kappa);
      for (int lvl = Q.level - 1; lvl >= P.level; --lvl)
        sys->add_delta(lhs, co, g.ancestor(Q, lvl));
      lhs.restrict_to(Q);
      LeafPoly rhs(g, kappa);
      const auto pq = sys->coarse_poly(Q, N);
      rhs.add_on_cube(Q, pq.data(), kappa);
      const auto pp = sys->coarse_poly(P, N);
      LeafPoly ep(g, kappa);
      ep.add_on_cube(P, pp.data(), kappa);
      ep.restrict_to(Q);
      rhs.add_scaled(ep, -1.0);
      lhs.add_scaled(rhs, -1.0);
      tele = std::max(tele, std::sqrt(lhs.norm2(mu) / std::max(f2, 1e-300)));
    }
    rep.add("telescoping/" + tag, tele, 1e-9);
  }

  auto op = DiscreteOperator::assemble(in.kernel, in.trunc, in.sigma, in.omega, in.quad_order);
  auto adj = op.adjoint();
  {
    SplitMix64 rng(in.seed + 17);
    std::vector<double> f(g.leaf_count()), h(g.leaf_count());
    for (auto& x : f) x = rng.next_in(-1.0, 1.0);
    for (auto& x : h) x = rng.next_in(-1.0, 1.0);
    const double lhs = op.pairing(f, h);
    const double rhs = adj.pairing(h, f);
    rep.add("duality", std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}),
            1e-12);
    const double nrm = op.operator_norm();
    const double tst = cube_testing(op).value;
    rep.add("testing_below_norm", nrm > 0.0 ? std::max(0.0, tst - nrm) / nrm : 0.0, 1e-9);
  }

  {
    SplitMix64 rng(in.seed + 23);
    std::vector<double> f(g.leaf_count()), h(g.leaf_count());
    for (auto& x : f) x = rng.next_in(-1.0, 1.0);
    for (auto& x : h) x = rng.next_in(-1.0, 1.0);
    PolyOperator pop(in.kernel, in.trunc, in.sigma, in.omega, 2 * kappa - 1, kappa,
                     in.quad_order);
    CoronaTree tree = build_corona(f, in.sigma, in.omega, {in.gamma, kappa, in.kernel.alpha});
    ShiftedCorona shift = shifted_corona(tree, in.goodness.tau);
    const FormLedger led =
        compute_ledger(pop, fsys, gsys, f, h, tree, shift, in.goodness, false, {});
    rep.add("pairing_expansion", led.residual_pairing(), 1e-9);
    rep.add("size_split", led.residual_size(), 1e-9);
    rep.add("block_sum", led.residual_blocks(), 1e-8);
    rep.add("canonical_split", led.residual_canonical(), 1e-8);
    rep.add("vanishing_buckets",
            static_cast<double>(led.canonical.far_above_pairs + led.canonical.disjoint_pairs),
            0.5);
    double blk_res = 0.0;
    for (const auto& b : led.blocks)
      blk_res = std::max(blk_res, b.residual / std::max(1.0, std::abs(b.block)));
    rep.add("block_parts", blk_res, 1e-8);
    if (kappa == 1)
      rep.add("commutator_kappa1",
              std::abs(led.commutator_total) / std::max(1.0, std::abs(led.pairing_matrix)),
              1e-10);
  }
  return rep;
}

DecompositionTrace run_decomposition(const Instance& in, const std::vector<double>& f,
                                     const std::vector<double>& g) {
  DecompositionTrace tr;
  const int kappa = in.kappa;
  AlpertSystem fsys(in.sigma, kappa);
  AlpertSystem gsys(in.omega, kappa);
  PolyOperator pop(in.kernel, in.trunc, in.sigma, in.omega, 2 * kappa - 1, kappa, in.quad_order);
  tr.tree = build_corona(f, in.sigma, in.omega, {in.gamma, kappa, in.kernel.alpha});
  tr.shift = shifted_corona(tr.tree, in.goodness.tau);
  FormConstants consts;
  consts.a2 = muckenhoupt_a2(in.sigma, in.omega, in.kernel.alpha).value;
  auto leaf = DiscreteOperator::from_poly(pop);
  consts.testing = cube_testing(leaf).value;
  consts.testing_kappa = cube_testing_poly(pop, kappa, false).value;
  consts.pivotal = pivotal_constant(in.sigma, in.omega, in.kernel.alpha, kappa).value;
  tr.ledger = compute_ledger(pop, fsys, gsys, f, g, tr.tree, tr.shift, in.goodness, false, consts);
  return tr;
}

std::string DecompositionTrace::to_json(bool with_timestamp) const {
  json j;
  json stops = json::array();
  for (const auto& st : tree.stops()) {
    const char* trig = st.trigger == CoronaTree::Trigger::root
                           ? "root"
                           : (st.trigger == CoronaTree::Trigger::average ? "average" : "pivotal");
    stops.push_back({{"cube", cube_json(st.cube)},
                     {"generation", st.generation},
                     {"parent", st.parent},
                     {"alpha", st.alpha_f},
                     {"avg", st.avg},
                     {"trigger", trig}});
  }
  j["stops"] = stops;
  j["generations"] = tree.generations();
  j["tau"] = shift.tau;
  j["max_overlap"] = shift.max_overlap;

  json led;
  led["pairing_matrix"] = ledger.pairing_matrix;
  led["pairing_expanded"] = ledger.pairing_expanded;
  led["detail_part"] = ledger.detail_part;
  led["size"] = {{"below", ledger.size.below},
                 {"above", ledger.size.above},
                 {"disjoint_far", ledger.size.disjoint_far},
                 {"comparable", ledger.size.comparable},
                 {"below_pairs", ledger.size.below_pairs}};
  led["canonical"] = {{"diagonal", ledger.canonical.diagonal},
                      {"far_below", ledger.canonical.far_below},
                      {"far_below_1", ledger.canonical.far_below_1},
                      {"far_below_2", ledger.canonical.far_below_2},
                      {"far_above_pairs", ledger.canonical.far_above_pairs},
                      {"disjoint_pairs", ledger.canonical.disjoint_pairs},
                      {"intertwining_ratio", ledger.canonical.intertwining_ratio}};
  json blocks = json::array();
  for (const auto& b : ledger.blocks) {
    if (b.pairs == 0) continue;
    blocks.push_back({{"stop", b.stop},
                      {"block", b.block},
                      {"paraproduct_corona", b.paraproduct_corona},
                      {"paraproduct_stopping", b.paraproduct_stopping},
                      {"stop_form", b.stop_form},
                      {"neighbour", b.neighbour},
                      {"commutator", b.commutator},
                      {"residual", b.residual},
                      {"pairs", b.pairs},
                      {"bound_ratio", b.bound_ratio}});
  }
  led["blocks"] = blocks;
  led["blocks_total"] = ledger.blocks_total;
  led["commutator_total"] = ledger.commutator_total;
  led["homeless_deep_pairs"] = ledger.homeless_deep_pairs;
  led["below_bound_ratio_max"] = ledger.below_bound_ratio_max;
  led["almost_orth_ratio_max"] = ledger.almost_orth_ratio_max;
  j["ledger"] = led;
  j["residuals"] = {{"pairing", ledger.residual_pairing()},
                    {"size", ledger.residual_size()},
                    {"blocks", ledger.residual_blocks()},
                    {"canonical", ledger.residual_canonical()}};
  if (with_timestamp) j["generated_at"] = timestamp_now();
  return j.dump(2);
}

std::vector<double> load_function_json(const std::string& text, const Grid& g) {
  json j = json::parse(text);
  std::vector<double> v;
  if (j.is_array()) {
    v = j.get<std::vector<double>>();
  } else if (j.contains("values")) {
    v = j.at("values").get<std::vector<double>>();
  } else {
    throw config_error("function file: expected an array or a values field");
  }
  if (static_cast<std::int64_t>(v.size()) != g.leaf_count())
    throw config_error("function file: length must equal the leaf count");
  return v;
}

}  // namespace twlab
