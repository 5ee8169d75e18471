#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jshap/value_functions.hpp"

namespace jshap {

/// Per-feature Shapley attributions plus estimator metadata. For the exact
/// estimator the efficiency residual sum(phi) - (v([d]) - v(empty)) is zero
/// within 1e-10.
struct AttributionVector {
  std::vector<double> phi;
  std::string estimator;
  std::uint64_t seed = 0;
  int samples = 0;
  double efficiency_residual = 0.0;

  int dim() const { return static_cast<int>(phi.size()); }
  std::string to_json_string() const;
};

/// Exact enumeration over all 2^d coalitions (d <= 20). Values are memoized
/// so v is evaluated once per subset; weights are built from exact integer
/// binomials.
AttributionVector exact_shapley(const ValueFunction& v, int d);

/// Permutation sampling: each sampled permutation contributes a telescoping
/// sweep of marginal contributions. Unbiased for exact Shapley;
/// per-permutation streams keyed by (seed, index) make the result independent
/// of evaluation order.
AttributionVector permutation_shapley(const ValueFunction& v, int d, int permutations,
                                      std::uint64_t seed);

/// Permutation sampling with v(S) replaced by zero whenever
/// |S| < ceil(frac * d). At frac = 0 this is bit-identical to
/// permutation_shapley for a matched seed. The substitution is literal: the
/// estimator is biased unless the game already vanishes below the floor, in
/// which case it matches the plain sampler exactly.
AttributionVector truncated_permutation_jbshap(const ValueFunction& v, int d,
                                               int permutations, double frac,
                                               std::uint64_t seed);

/// Componentwise sum of attributions over many explicands; optionally
/// normalized so the absolute values sum to one.
struct GlobalAttribution {
  std::vector<double> values;
  bool normalized = false;
};

GlobalAttribution global_shapley(const std::vector<AttributionVector>& attrs,
                                 bool normalize);

}  // namespace jshap
