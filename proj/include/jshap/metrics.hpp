#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jshap/core.hpp"
#include "jshap/shapley.hpp"

namespace jshap {

enum class CurveTarget { f, f_times_p };

/// Target values after removing the top-attributed features at each fraction.
/// Fractions are strictly increasing and start at 0.
struct DeletionCurve {
  std::vector<double> fractions;
  std::vector<double> values;
  CurveTarget target = CurveTarget::f;

  std::string to_csv() const;  // "fraction,value" rows
};

/// At fraction q, the floor(q * d) features with the largest attribution are
/// replaced by baseline values and the target is evaluated at the splice.
/// Ordering is by signed attribution (ties by ascending index); set
/// `by_magnitude` to rank by |phi| instead.
DeletionCurve deletion_curve(const AttributionVector& attr, const GameContext& ctx,
                             const std::vector<double>& fractions, CurveTarget target,
                             bool by_magnitude = false);

struct AucResult {
  double value = 0.0;
  /// False when the q=0 value was zero and normalization was skipped.
  bool normalized = true;
};

/// Trapezoidal integral over the fraction axis of the curve normalized by its
/// q=0 value.
AucResult auc(const DeletionCurve& curve);

/// Pearson correlation of fractional ranks (ties averaged). Throws
/// UndefinedCorrelationError when either side has zero rank variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Rank correlation between attribution sums and value drops v([d]) -
/// v([d] \ R) over random coalitions R of size floor(frac * d), averaged over
/// the given fractions.
double sensitivity_n(const AttributionVector& attr, const ValueFunction& v,
                     const std::vector<double>& n_fracs, int trials,
                     std::uint64_t seed);

}  // namespace jshap
