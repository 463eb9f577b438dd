#pragma once

#include "twlab/alpert.hpp"
#include "twlab/constants.hpp"
#include "twlab/corona.hpp"
#include "twlab/op.hpp"

namespace twlab {

// Relative-position splitting of the detail-pair sum: deeply-below pairs,
// deeply-above pairs, far-separated disjoint pairs, and the rest (comparable
// scales or shallow nesting).  The four buckets partition all pairs exactly,
// so they always resum to the detail part of the pairing.
struct SizeSplit {
  double below = 0.0;
  double above = 0.0;
  double disjoint_far = 0.0;
  double comparable = 0.0;
  long below_pairs = 0;
  double total() const { return below + above + disjoint_far + comparable; }
};

struct CanonicalSplit {
  double diagonal = 0.0;
  double far_below = 0.0;    // = far_below_1 - far_below_2
  double far_below_1 = 0.0;  // all nested pairs with the detail home strictly inside
  double far_below_2 = 0.0;  // the shallow-nesting correction
  double far_above = 0.0;
  double disjoint = 0.0;
  long far_above_pairs = 0;  // index-set emptiness, asserted zero
  long disjoint_pairs = 0;
  double intertwining_ratio = 0.0;  // |far_below_1| / ((V2 + sqrt(A2) + Tk) ||f|| ||g||)
};

// One stopping block of the deep-pair form, split into the four local forms.
struct BlockParts {
  int stop = -1;  // index into CoronaTree::stops()
  double block = 0.0;
  double paraproduct_corona = 0.0;
  double paraproduct_stopping = 0.0;
  double stop_form = 0.0;
  double neighbour = 0.0;
  double commutator = 0.0;
  double residual = 0.0;  // |(sum of parts) - block|
  long pairs = 0;
  double bound_ratio = 0.0;       // diagonal block vs its quasiorthogonal envelope
  double almost_orth_corona = 0.0;
  double almost_orth_stopping = 0.0;
};

struct FormLedger {
  double pairing_matrix = 0.0;
  double pairing_expanded = 0.0;
  double detail_part = 0.0;  // pairing minus the coarse cross terms
  SizeSplit size;
  CanonicalSplit canonical;
  std::vector<BlockParts> blocks;
  double blocks_total = 0.0;       // sum of extended blocks; equals size.below
  double commutator_total = 0.0;
  long homeless_deep_pairs = 0;  // deep pairs whose detail cube has no shifted home
  double below_bound_ratio_max = 0.0;
  double almost_orth_ratio_max = 0.0;

  double residual_pairing() const {
    const double s = std::max({std::abs(pairing_matrix), std::abs(pairing_expanded), 1e-300});
    return std::abs(pairing_matrix - pairing_expanded) / s;
  }
  double residual_size() const {
    const double s = std::max({std::abs(detail_part), 1.0});
    return std::abs(size.total() - detail_part) / s;
  }
  double residual_blocks() const {
    const double s = std::max({std::abs(size.below), 1.0});
    return std::abs(blocks_total - size.below) / s;
  }
  double residual_canonical() const {
    const double s = std::max({std::abs(size.below), 1.0});
    return std::abs(canonical.diagonal + canonical.far_below + canonical.far_above +
                    canonical.disjoint - size.below) /
           s;
  }
};

// Reference constants used only for the recorded bound ratios.
struct FormConstants {
  double a2 = 0.0;
  double testing = 0.0;        // plain cube testing
  double testing_kappa = 0.0;  // order-kappa cube testing
  double pivotal = 0.0;
};

// Computes the pairing <T_sigma f, g>_omega and every splitting of it.  The
// operator must be assembled with column degree kappa and row degree
// 2 kappa - 1 (products of two degree-<kappa factors land in the row space).
// With restrict_good set, the splittings keep only pairs of good cubes
// (identities then hold within the restricted index set).
FormLedger compute_ledger(const PolyOperator& op, const AlpertSystem& fsys,
                          const AlpertSystem& gsys, const std::vector<double>& f,
                          const std::vector<double>& g, const CoronaTree& tree,
                          const ShiftedCorona& shift, const GoodnessConfig& cfg,
                          bool restrict_good = false, const FormConstants& consts = {});

}  // namespace twlab
