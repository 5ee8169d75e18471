#include "jshap/shapley.hpp"

#include <bit>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "jshap/rng.hpp"

namespace jshap {

namespace {

// 1 / (d * C(d-1, s)) as a double. Exact for d <= 20: the denominator stays
// far below 2^53.
std::vector<double> subset_weights(int d) {
  std::vector<double> w(static_cast<std::size_t>(d), 0.0);
  for (int s = 0; s < d; ++s) {
    std::uint64_t binom = 1;
    for (int k = 1; k <= s; ++k) {
      binom = binom * static_cast<std::uint64_t>(d - 1 - (k - 1)) /
              static_cast<std::uint64_t>(k);
    }
    w[static_cast<std::size_t>(s)] =
        1.0 / (static_cast<double>(d) * static_cast<double>(binom));
  }
  return w;
}

AttributionVector permutation_sample(const ValueFunction& v, int d, int permutations,
                                     std::uint64_t seed, int size_floor,
                                     const char* estimator) {
  if (permutations < 1) throw InvalidInputError("need at least one permutation");
  if (d < 1) throw InvalidInputError("dimension must be positive");

  const auto value_at = [&](std::uint64_t mask, int size) {
    if (size < size_floor) return 0.0;
    return v(Coalition::from_mask(mask, d));
  };

  std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
  std::vector<int> perm(static_cast<std::size_t>(d));
  for (int t = 0; t < permutations; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::uint64_t mask = 0;
    double prev = value_at(0, 0);
    for (int k = 0; k < d; ++k) {
      const int i = perm[static_cast<std::size_t>(k)];
      mask |= (1ULL << i);
      const double cur = value_at(mask, k + 1);
      acc[static_cast<std::size_t>(i)] += cur - prev;
      prev = cur;
    }
  }

  AttributionVector out;
  out.phi.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    out.phi[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)] / permutations;
  }
  out.estimator = estimator;
  out.seed = seed;
  out.samples = permutations;
  const double span = v(Coalition::full(d)) - v(Coalition::empty(d));
  out.efficiency_residual =
      std::accumulate(out.phi.begin(), out.phi.end(), 0.0) - span;
  return out;
}

}  // namespace

std::string AttributionVector::to_json_string() const {
  nlohmann::json j;
  j["phi"] = phi;
  j["estimator"] = estimator;
  j["seed"] = seed;
  j["residual"] = efficiency_residual;
  return j.dump(2);
}

AttributionVector exact_shapley(const ValueFunction& v, int d) {
  if (d < 1) throw InvalidInputError("dimension must be positive");
  if (d > 20) throw CapacityError("exact enumeration limited to d <= 20");

  const std::size_t n = std::size_t{1} << d;
  std::vector<double> values(n);
  for (std::size_t mask = 0; mask < n; ++mask) {
    values[mask] = v(Coalition::from_mask(mask, d));
  }

  const std::vector<double> weights = subset_weights(d);
  AttributionVector out;
  out.phi.assign(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    const std::uint64_t bit = 1ULL << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < n; ++mask) {
      if (mask & bit) continue;
      const int s = std::popcount(mask);
      phi += weights[static_cast<std::size_t>(s)] * (values[mask | bit] - values[mask]);
    }
    out.phi[static_cast<std::size_t>(i)] = phi;
  }
  out.estimator = "exact";
  out.samples = static_cast<int>(n);
  out.efficiency_residual = std::accumulate(out.phi.begin(), out.phi.end(), 0.0) -
                            (values[n - 1] - values[0]);
  return out;
}

AttributionVector permutation_shapley(const ValueFunction& v, int d, int permutations,
                                      std::uint64_t seed) {
  return permutation_sample(v, d, permutations, seed, 0, "permutation");
}

AttributionVector truncated_permutation_jbshap(const ValueFunction& v, int d,
                                               int permutations, double frac,
                                               std::uint64_t seed) {
  if (frac < 0.0 || frac > 1.0) throw InvalidInputError("frac must lie in [0, 1]");
  const int floor = static_cast<int>(std::ceil(frac * d));
  return permutation_sample(v, d, permutations, seed, floor, "truncated_permutation");
}

GlobalAttribution global_shapley(const std::vector<AttributionVector>& attrs,
                                 bool normalize) {
  if (attrs.empty()) throw InvalidInputError("no attributions to aggregate");
  const std::size_t d = attrs.front().phi.size();
  GlobalAttribution out;
  out.values.assign(d, 0.0);
  for (const AttributionVector& a : attrs) {
    if (a.phi.size() != d) throw InvalidInputError("attribution lengths differ");
    for (std::size_t i = 0; i < d; ++i) out.values[i] += a.phi[i];
  }
  if (normalize) {
    double total = 0.0;
    for (double v : out.values) total += std::fabs(v);
    if (total <= 0.0) {
      throw DegenerateNormalizationError("all-zero attributions cannot be normalized");
    }
    for (double& v : out.values) v /= total;
    out.normalized = true;
  }
  return out;
}

}  // namespace jshap
