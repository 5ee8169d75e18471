#include "jshap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jshap/rng.hpp"

namespace jshap {

namespace {

std::vector<double> fractional_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t k = 0;
  while (k < n) {
    std::size_t run = k + 1;
    while (run < n && values[order[run]] == values[order[k]]) ++run;
    const double avg_rank = 0.5 * static_cast<double>(k + run - 1) + 1.0;
    for (std::size_t t = k; t < run; ++t) ranks[order[t]] = avg_rank;
    k = run;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) {
    throw UndefinedCorrelationError("constant series has no rank correlation");
  }
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace

std::string DeletionCurve::to_csv() const {
  std::ostringstream out;
  out << "fraction,value\n";
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    out << fractions[i] << "," << values[i] << "\n";
  }
  return out.str();
}

DeletionCurve deletion_curve(const AttributionVector& attr, const GameContext& ctx,
                             const std::vector<double>& fractions, CurveTarget target,
                             bool by_magnitude) {
  const int d = ctx.dim();
  if (attr.dim() != d) throw InvalidInputError("attribution length must match dimension");
  if (fractions.size() < 1 || fractions.front() != 0.0) {
    throw InvalidInputError("fractions must start at 0");
  }
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] < 0.0 || fractions[i] > 1.0) {
      throw InvalidInputError("fractions must lie in [0, 1]");
    }
    if (i > 0 && fractions[i] <= fractions[i - 1]) {
      throw InvalidInputError("fractions must be strictly increasing");
    }
  }
  const DataPoint& baseline = ctx.fixed_baseline();
  if (target == CurveTarget::f_times_p && !ctx.has_density()) {
    throw ConfigError("f*p curve target needs a density");
  }

  // Removal order: largest attribution first, ties by ascending index.
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double va = by_magnitude ? std::fabs(attr.phi[static_cast<std::size_t>(a)])
                                   : attr.phi[static_cast<std::size_t>(a)];
    const double vb = by_magnitude ? std::fabs(attr.phi[static_cast<std::size_t>(b)])
                                   : attr.phi[static_cast<std::size_t>(b)];
    return va > vb;
  });

  DeletionCurve curve;
  curve.fractions = fractions;
  curve.target = target;
  curve.values.reserve(fractions.size());
  for (double q : fractions) {
    const int removed = static_cast<int>(std::floor(q * d));
    std::vector<int> kept;
    kept.reserve(static_cast<std::size_t>(d - removed));
    std::vector<bool> is_removed(static_cast<std::size_t>(d), false);
    for (int k = 0; k < removed; ++k) {
      is_removed[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
    }
    for (int i = 0; i < d; ++i) {
      if (!is_removed[static_cast<std::size_t>(i)]) kept.push_back(i);
    }
    const DataPoint point = splice(ctx.x(), baseline, Coalition(std::move(kept), d));
    double value = ctx.f()(point);
    if (target == CurveTarget::f_times_p) value *= ctx.p()(point);
    curve.values.push_back(value);
  }
  return curve;
}

AucResult auc(const DeletionCurve& curve) {
  if (curve.fractions.size() < 2) throw InvalidInputError("auc needs at least two points");
  AucResult result;
  const double initial = curve.values.front();
  result.normalized = initial != 0.0;
  const double scale = result.normalized ? 1.0 / initial : 1.0;
  double area = 0.0;
  for (std::size_t i = 1; i < curve.fractions.size(); ++i) {
    const double width = curve.fractions[i] - curve.fractions[i - 1];
    area += 0.5 * width * (curve.values[i] + curve.values[i - 1]) * scale;
  }
  result.value = area;
  return result;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidInputError("spearman needs two equally sized series of length >= 2");
  }
  return pearson(fractional_ranks(a), fractional_ranks(b));
}

double sensitivity_n(const AttributionVector& attr, const ValueFunction& v,
                     const std::vector<double>& n_fracs, int trials,
                     std::uint64_t seed) {
  if (trials < 3) throw InvalidInputError("sensitivity_n needs at least three trials");
  if (n_fracs.empty()) throw InvalidInputError("no fractions given");
  const int d = attr.dim();
  const double v_full = v(Coalition::full(d));

  double total = 0.0;
  for (std::size_t fi = 0; fi < n_fracs.size(); ++fi) {
    const int size = static_cast<int>(std::floor(n_fracs[fi] * d));
    if (size < 1 || size > d) {
      throw InvalidInputError("fraction yields an empty or full removal set");
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(fi)));
    std::vector<double> sums;
    std::vector<double> drops;
    std::vector<int> indices(static_cast<std::size_t>(d));
    for (int t = 0; t < trials; ++t) {
      std::iota(indices.begin(), indices.end(), 0);
      rng.shuffle(indices);
      std::vector<int> removed(indices.begin(), indices.begin() + size);
      double phi_sum = 0.0;
      for (int i : removed) phi_sum += attr.phi[static_cast<std::size_t>(i)];
      const Coalition rest = Coalition(std::move(removed), d).complement();
      sums.push_back(phi_sum);
      drops.push_back(v_full - v(rest));
    }
    total += spearman(sums, drops);
  }
  return total / static_cast<double>(n_fracs.size());
}

}  // namespace jshap
