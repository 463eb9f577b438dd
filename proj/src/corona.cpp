#include "twlab/corona.hpp"

#include <algorithm>
#include <cmath>

#include "twlab/constants.hpp"

namespace twlab {

namespace {

// per-cube integral of |f| dsigma and sigma mass, bottom-up
struct CubeSums {
  std::vector<double> absf;  // by cube id
  std::vector<double> mass;
  CubeSums(const std::vector<double>& f, const Measure& sigma) {
    const Grid& g = sigma.grid();
    absf.assign(g.cube_count(), 0.0);
    mass.assign(g.cube_count(), 0.0);
    for (std::int64_t i = 0; i < g.leaf_count(); ++i) {
      const std::int64_t id = g.cube_id(g.leaf_from_id(i));
      absf[id] = std::abs(f[i]) * sigma.leaf_mass(i);
      mass[id] = sigma.leaf_mass(i);
    }
    for (int l = g.depth() - 1; l >= 0; --l)
      for (const Cube& c : g.level_cubes(l)) {
        const std::int64_t id = g.cube_id(c);
        for (int w = 0; w < (1 << g.dim()); ++w) {
          const std::int64_t ch = g.cube_id(g.child(c, w));
          absf[id] += absf[ch];
          mass[id] += mass[ch];
        }
      }
  }
};

}  // namespace

std::vector<int> CoronaTree::children_of(int s) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(stops_.size()); ++i)
    if (stops_[i].parent == s) out.push_back(i);
  return out;
}

CoronaTree build_corona(const std::vector<double>& f, const Measure& sigma,
                        const Measure& omega, const CoronaConfig& cfg) {
  const Grid& g = sigma.grid();
  if (!(cfg.gamma > 1.0)) throw config_error("corona: gamma must exceed 1");
  if (static_cast<std::int64_t>(f.size()) != g.leaf_count())
    throw config_error("corona: f has wrong length");
  if (!(sigma.total_mass() > 0.0)) throw config_error("corona: sigma has zero mass at the root");

  CubeSums sums(f, sigma);
  CoronaTree tree;
  tree.grid_ = g;
  tree.cfg_ = cfg;
  tree.corona_.assign(g.cube_count(), -1);
  tree.stop_index_.assign(g.cube_count(), -1);

  const auto avg = [&](const Cube& c) {
    const std::int64_t id = g.cube_id(c);
    return sums.mass[id] > 0.0 ? sums.absf[id] / sums.mass[id] : 0.0;
  };

  // generation-major worklist
  std::vector<int> frontier;
  tree.stops_.push_back({g.root(), 0, -1, avg(g.root()), avg(g.root())});
  tree.stop_index_[g.cube_id(g.root())] = 0;
  frontier.push_back(0);
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int s : frontier) {
      const Cube F = tree.stops_[s].cube;
      const double ef = tree.stops_[s].avg;
      // DFS for maximal triggering strict subcubes; assign coronas meanwhile
      const std::function<void(const Cube&)> walk = [&](const Cube& c) {
        auto trig = CoronaTree::Trigger::root;
        const std::int64_t id = g.cube_id(c);
        if (sums.mass[id] > 0.0) {
          if (ef > 0.0 && sums.absf[id] / sums.mass[id] >= cfg.gamma * ef) {
            trig = CoronaTree::Trigger::average;
          } else {
            const double p = poisson_tail(sigma, cfg.kappa, cfg.alpha, g.box(c), F);
            if (p * p * omega.mass(c) >= cfg.gamma * sums.mass[id])
              trig = CoronaTree::Trigger::pivotal;
          }
        } else {
          ++tree.skipped_;
        }
        if (trig != CoronaTree::Trigger::root) {
          const int idx = static_cast<int>(tree.stops_.size());
          CoronaTree::Stop st;
          st.cube = c;
          st.generation = tree.stops_[s].generation + 1;
          st.parent = s;
          st.avg = avg(c);
          st.alpha_f = std::max(tree.stops_[s].alpha_f, st.avg);
          st.trigger = trig;
          tree.stops_.push_back(st);
          tree.stop_index_[id] = idx;
          next.push_back(idx);
          return;  // maximal: do not descend
        }
        tree.corona_[id] = s;
        if (!g.is_leaf(c))
          for (const Cube& ch : g.children(c)) walk(ch);
      };
      tree.corona_[g.cube_id(F)] = s;
      if (!g.is_leaf(F))
        for (const Cube& ch : g.children(F)) walk(ch);
      tree.generations_ = std::max(tree.generations_, tree.stops_[s].generation);
    }
    frontier = std::move(next);
  }
  return tree;
}

ShiftedCorona shifted_corona(const CoronaTree& tree, int tau) {
  const Grid& g = tree.grid();
  if (tau < 1) throw config_error("shifted corona: tau must be positive");
  ShiftedCorona out;
  out.tau = tau;
  out.home.assign(g.cube_count(), -1);
  out.members.resize(tree.stops().size());

  // N^tau(F) membership: J below F with J.level < F.level + tau.
  const auto in_ntau = [&](const Cube& J, const Cube& F) {
    return g.contains(F, J) && J.level < F.level + tau;
  };

  std::vector<int> overlap(g.cube_count(), 0);
  for (int s = 0; s < static_cast<int>(tree.stops().size()); ++s) {
    const Cube F = tree.stops()[s].cube;
    const auto kids = tree.children_of(s);
    const std::function<void(const Cube&)> walk = [&](const Cube& J) {
      const std::int64_t id = g.cube_id(J);
      bool member = tree.corona_of(J) == s && !in_ntau(J, F);
      if (!member) {
        for (int ks : kids) {
          const Cube Fp = tree.stops()[ks].cube;
          if (in_ntau(J, Fp) && !in_ntau(J, F)) {
            member = true;
            break;
          }
        }
      }
      if (member) {
        out.members[s].push_back(J);
        ++overlap[id];
        out.home[id] = s;
      }
      if (!g.is_leaf(J))
        for (const Cube& ch : g.children(J)) walk(ch);
    };
    walk(F);
  }
  for (int v : overlap) out.max_overlap = std::max(out.max_overlap, v);
  if (out.max_overlap > tau)
    throw numeric_error("shifted coronas overlap more than tau times");
  return out;
}

CoronaDiagnostics verify_corona(const CoronaTree& tree, const std::vector<double>& f,
                                const Measure& sigma, const Measure& omega, double pivotal_sq) {
  const Grid& g = tree.grid();
  const CoronaConfig& cfg = tree.config();
  CubeSums sums(f, sigma);
  CoronaDiagnostics d;
  d.skipped_zero_mass = 0;

  // Carleson and the one-step bound over stopping cubes.
  const auto& stops = tree.stops();
  for (int s = 0; s < static_cast<int>(stops.size()); ++s) {
    const double fs = sigma.mass(stops[s].cube);
    if (!(fs > 0.0)) continue;
    double below = 0.0;
    for (int t = 0; t < static_cast<int>(stops.size()); ++t)
      if (g.contains(stops[s].cube, stops[t].cube)) below += sigma.mass(stops[t].cube);
    d.carleson_max = std::max(d.carleson_max, below / fs);
    double kids = 0.0;
    for (int t : tree.children_of(s)) kids += sigma.mass(stops[t].cube);
    const double rhs = (pivotal_sq + 1.0) / cfg.gamma * fs;
    if (rhs > 0.0) d.first_step_max = std::max(d.first_step_max, kids / rhs);
  }

  // Quasiorthogonality ratio.
  double quasi = 0.0;
  for (const auto& st : stops) quasi += st.alpha_f * st.alpha_f * sigma.mass(st.cube);
  double f2 = 0.0;
  for (std::int64_t i = 0; i < g.leaf_count(); ++i) f2 += f[i] * f[i] * sigma.leaf_mass(i);
  d.quasi_ratio = f2 > 0.0 ? quasi / f2 : 0.0;

  // Average and pivotal control inside every corona.
  for (const Cube& I : g.all_cubes()) {
    const int s = tree.corona_of(I);
    if (s < 0) continue;
    const std::int64_t id = g.cube_id(I);
    if (!(sums.mass[id] > 0.0)) {
      ++d.skipped_zero_mass;
      continue;
    }
    ++d.checked;
    const Cube F = stops[s].cube;
    const double ei = sums.absf[id] / sums.mass[id];
    if (stops[s].alpha_f > 0.0)
      d.avg_control_max = std::max(d.avg_control_max, ei / (cfg.gamma * stops[s].alpha_f));
    const double p = poisson_tail(sigma, cfg.kappa, cfg.alpha, g.box(I), F);
    const double ratio = p * p * omega.mass(I) / (cfg.gamma * sums.mass[id]);
    if (I == F) {
      d.piv_top_max = std::max(d.piv_top_max, ratio);  // not controlled by maximality
    } else {
      d.piv_control_max = std::max(d.piv_control_max, ratio);
    }
  }
  return d;
}

}  // namespace twlab
