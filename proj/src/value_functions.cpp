#include "jshap/value_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "jshap/rng.hpp"

namespace jshap {

namespace {

// Enumerates the free-coordinate subgrid of `grid` for coalition s, invoking
// visit(spliced point) for every completion of x_S.
template <typename Visit>
void for_each_completion(const GridSupport& grid, const DataPoint& x, const Coalition& s,
                         Visit&& visit) {
  const Coalition free = s.complement();
  const auto& free_idx = free.members();
  std::vector<std::size_t> counter(free_idx.size(), 0);
  std::vector<double> point = x.values();
  while (true) {
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
      const auto& support = grid.coordinate(free_idx[k]);
      point[static_cast<std::size_t>(free_idx[k])] = support[counter[k]];
    }
    visit(DataPoint(point));
    // Odometer increment over the free coordinates.
    std::size_t k = 0;
    for (; k < counter.size(); ++k) {
      const auto& support = grid.coordinate(free_idx[k]);
      if (++counter[k] < support.size()) break;
      counter[k] = 0;
    }
    if (k == counter.size()) break;
    if (counter.empty()) break;
  }
}

std::uint64_t coalition_stream(std::uint64_t seed, const Coalition& s) {
  return mix_seed(seed, s.mask() + 0x51ed270b);
}

}  // namespace

ValueFunction bshap(const GameContext& ctx) {
  const DataPoint& baseline = ctx.fixed_baseline();  // config error when absent
  const ScalarField f = ctx.f();
  const DataPoint x = ctx.x();
  return ValueFunction("bshap", ctx.dim(), [f, x, baseline](const Coalition& s) {
    return f(splice(x, baseline, s));
  });
}

ValueFunction jbshap(const GameContext& ctx) {
  const DataPoint& baseline = ctx.fixed_baseline();
  const DensityField p = ctx.p();  // config error when absent
  const ScalarField f = ctx.f();
  const DataPoint x = ctx.x();
  return ValueFunction("jbshap", ctx.dim(), [f, p, x, baseline](const Coalition& s) {
    const DataPoint point = splice(x, baseline, s);
    return f(point) * p(point);
  });
}

namespace {

// Shared enumerate-or-sample loop over a finite baseline list. `term` maps a
// spliced point to the integrand value.
double baseline_average(const BaselineDistribution& dist, const DataPoint& x,
                        const Coalition& s, int n, std::uint64_t seed,
                        const std::function<double(const DataPoint&)>& term) {
  if (static_cast<int>(dist.points.size()) <= n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dist.points.size(); ++k) {
      acc += dist.weights[k] * term(splice(x, dist.points[k], s));
    }
    return acc;
  }
  Rng rng(coalition_stream(seed, s));
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    std::size_t pick = dist.points.size() - 1;
    double cum = 0.0;
    for (std::size_t j = 0; j < dist.points.size(); ++j) {
      cum += dist.weights[j];
      if (u < cum) {
        pick = j;
        break;
      }
    }
    acc += term(splice(x, dist.points[pick], s));
  }
  return acc / n;
}

// Distinct free-coordinate patterns among the baseline points, in first-seen
// order. Used by the uniform-C0 form of rjbshap.
std::vector<DataPoint> distinct_patterns(const BaselineDistribution& dist,
                                         const Coalition& s) {
  const Coalition free = s.complement();
  std::vector<DataPoint> patterns;
  std::vector<std::vector<double>> seen;
  for (const DataPoint& pt : dist.points) {
    std::vector<double> key;
    key.reserve(free.members().size());
    for (int i : free.members()) key.push_back(pt[i]);
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
      seen.push_back(key);
      patterns.push_back(pt);
    }
  }
  return patterns;
}

}  // namespace

ValueFunction rbshap(const GameContext& ctx, int n, std::uint64_t seed) {
  if (n <= 0) throw InvalidInputError("sample count must be positive");
  const BaselineDistribution dist = ctx.baseline_distribution();
  const ScalarField f = ctx.f();
  const DataPoint x = ctx.x();
  return ValueFunction("rbshap", ctx.dim(), [f, x, dist, n, seed](const Coalition& s) {
    return baseline_average(dist, x, s, n, seed,
                            [&f](const DataPoint& pt) { return f(pt); });
  });
}

ValueFunction rjbshap(const GameContext& ctx, int n, std::uint64_t seed) {
  if (n <= 0) throw InvalidInputError("sample count must be positive");
  const BaselineDistribution dist = ctx.baseline_distribution();
  const DensityField p = ctx.p();
  const ScalarField f = ctx.f();
  const DataPoint x = ctx.x();
  return ValueFunction("rjbshap", ctx.dim(), [f, p, x, dist, n, seed](const Coalition& s) {
    const auto term = [&f, &p](const DataPoint& pt) { return f(pt) * p(pt); };
    if (dist.uniform_density) {
      // Unnormalized integral against the constant baseline density C0 over
      // the distinct completions present in the list.
      double acc = 0.0;
      for (const DataPoint& pt : distinct_patterns(dist, s)) {
        acc += *dist.uniform_density * term(splice(x, pt, s));
      }
      return acc;
    }
    return baseline_average(dist, x, s, n, seed, term);
  });
}

CesEmpiricalValue ces_empirical_value(const GameContext& ctx, const Dataset& data,
                                      const Coalition& s) {
  if (data.empty()) throw InvalidInputError("ces_empirical needs a nonempty dataset");
  const DataPoint& x = ctx.x();
  double matched = 0.0;
  std::size_t count = 0;
  double total = 0.0;
  for (const DataPoint& row : data.rows()) {
    total += ctx.f()(row);
    bool match = true;
    for (int i : s.members()) {
      if (row[i] != x[i]) {
        match = false;
        break;
      }
    }
    if (match) {
      matched += ctx.f()(row);
      ++count;
    }
  }
  if (count == 0) {
    return {total / static_cast<double>(data.size()), true};
  }
  return {matched / static_cast<double>(count), false};
}

ValueFunction ces_empirical(const GameContext& ctx, Dataset data) {
  if (data.empty()) throw InvalidInputError("ces_empirical needs a nonempty dataset");
  // Model outputs are fixed per row; evaluate them once.
  std::vector<double> outputs;
  outputs.reserve(data.size());
  double total = 0.0;
  for (const DataPoint& row : data.rows()) {
    outputs.push_back(ctx.f()(row));
    total += outputs.back();
  }
  const double mean = total / static_cast<double>(data.size());
  const DataPoint x = ctx.x();
  return ValueFunction(
      "ces_empirical", ctx.dim(),
      [x, data = std::move(data), outputs = std::move(outputs), mean](const Coalition& s) {
        double matched = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < data.size(); ++r) {
          bool match = true;
          for (int i : s.members()) {
            if (data.row(r)[i] != x[i]) {
              match = false;
              break;
            }
          }
          if (match) {
            matched += outputs[r];
            ++count;
          }
        }
        if (count == 0) return mean;
        return matched / static_cast<double>(count);
      });
}

SupportSpec SupportSpec::grid(GridSupport g) {
  SupportSpec spec;
  spec.grid_support = std::move(g);
  return spec;
}

SupportSpec SupportSpec::box(std::vector<std::pair<double, double>> bounds, int samples) {
  if (samples <= 0) throw InvalidInputError("box sampling needs a positive sample count");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo <= hi)) throw InvalidInputError("box bounds must satisfy lo <= hi");
  }
  SupportSpec spec;
  spec.box_bounds = std::move(bounds);
  spec.box_samples = samples;
  return spec;
}

ValueFunction ces_sample(const GameContext& ctx, SupportSpec support, std::uint64_t seed) {
  if (!ctx.has_density()) throw ConfigError("ces_sample needs a density");
  const DensityField p = ctx.p();
  const ScalarField f = ctx.f();
  const DataPoint x = ctx.x();
  const int d = ctx.dim();
  if (support.grid_support && support.grid_support->dim() != d) {
    throw InvalidInputError("support grid dimension mismatch");
  }
  if (!support.grid_support && static_cast<int>(support.box_bounds.size()) != d) {
    throw InvalidInputError("support box dimension mismatch");
  }
  return ValueFunction(
      "ces_sample", d, [f, p, x, support = std::move(support), seed, d](const Coalition& s) {
        if (s.size() == d) return f(x);  // no free coordinates
        double weighted = 0.0;
        double total_weight = 0.0;
        if (support.grid_support) {
          for_each_completion(*support.grid_support, x, s, [&](const DataPoint& pt) {
            const double w = p(pt);
            weighted += f(pt) * w;
            total_weight += w;
          });
        } else {
          Rng rng(coalition_stream(seed, s));
          const Coalition free = s.complement();
          std::vector<double> point = x.values();
          for (int k = 0; k < support.box_samples; ++k) {
            for (int i : free.members()) {
              const auto& [lo, hi] = support.box_bounds[static_cast<std::size_t>(i)];
              point[static_cast<std::size_t>(i)] = rng.uniform(lo, hi);
            }
            const DataPoint pt(point);
            const double w = p(pt);
            weighted += f(pt) * w;
            total_weight += w;
          }
        }
        if (total_weight <= 0.0) {
          throw DegenerateSupportError("all sampled density weights are zero");
        }
        return weighted / total_weight;
      });
}

std::vector<double> SurrogateValueFunction::encode(const DataPoint& x, const Coalition& s) {
  const int d = x.dim();
  std::vector<double> enc(static_cast<std::size_t>(2 * d), 0.0);
  for (int i : s.members()) {
    enc[static_cast<std::size_t>(i)] = x[i];
    enc[static_cast<std::size_t>(d + i)] = 1.0;
  }
  return enc;
}

double SurrogateValueFunction::value(const DataPoint& x, const Coalition& s) const {
  if (x.dim() != dim_) throw InvalidInputError("surrogate dimension mismatch");
  if (net_) {
    return net_->forward(encode(x, s));
  }
  std::vector<double> key_values;
  key_values.reserve(s.members().size());
  for (int i : s.members()) key_values.push_back(x[i]);
  auto it = cells_.find({s.mask(), key_values});
  if (it == cells_.end()) return fallback_mean_;
  return it->second;
}

std::string SurrogateValueFunction::to_json_string() const {
  nlohmann::json j;
  j["backend"] = backend_;
  j["dim"] = dim_;
  if (net_) {
    j["net"] = nlohmann::json::parse(net_->to_json_string());
  } else {
    j["fallback_mean"] = fallback_mean_;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [key, mean] : cells_) {
      cells.push_back({{"mask", key.first}, {"values", key.second}, {"mean", mean}});
    }
    j["cells"] = std::move(cells);
  }
  return j.dump(2);
}

SurrogateValueFunction SurrogateValueFunction::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SurrogateValueFunction g;
  g.backend_ = j.at("backend").get<std::string>();
  g.dim_ = j.at("dim").get<int>();
  if (g.backend_ == "net") {
    g.net_ = FeedForwardNet::from_json_string(j.at("net").dump());
  } else {
    g.fallback_mean_ = j.at("fallback_mean").get<double>();
    for (const auto& cell : j.at("cells")) {
      g.cells_[{cell.at("mask").get<std::uint64_t>(),
                cell.at("values").get<std::vector<double>>()}] =
          cell.at("mean").get<double>();
    }
  }
  return g;
}

SurrogateValueFunction fit_ces_surrogate_table(const ScalarField& f, const Dataset& data) {
  if (data.empty()) throw InvalidInputError("surrogate fit needs a nonempty dataset");
  const int d = data.dim();
  if (d > 20) throw CapacityError("table surrogate limited to d <= 20");
  SurrogateValueFunction g;
  g.backend_ = "table";
  g.dim_ = d;

  std::vector<double> outputs;
  outputs.reserve(data.size());
  double total = 0.0;
  for (const DataPoint& row : data.rows()) {
    outputs.push_back(f(row));
    total += outputs.back();
  }
  g.fallback_mean_ = total / static_cast<double>(data.size());

  // Per-cell means over matching rows. The masked squared loss separates per
  // cell, so these means are its exact global minimizer for any coalition
  // weighting with full support.
  std::map<std::pair<std::uint64_t, std::vector<double>>, std::pair<double, std::size_t>>
      sums;
  for (const Coalition& s : enumerate_coalitions(d)) {
    const std::uint64_t mask = s.mask();
    for (std::size_t r = 0; r < data.size(); ++r) {
      std::vector<double> key;
      key.reserve(s.members().size());
      for (int i : s.members()) key.push_back(data.row(r)[i]);
      auto& cell = sums[{mask, std::move(key)}];
      cell.first += outputs[r];
      cell.second += 1;
    }
  }
  for (const auto& [key, cell] : sums) {
    g.cells_[key] = cell.first / static_cast<double>(cell.second);
  }
  return g;
}

Coalition sample_shapley_coalition(int d, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  const int cut = static_cast<int>(rng.below(static_cast<std::uint64_t>(d) + 1));
  perm.resize(static_cast<std::size_t>(cut));
  return Coalition(std::move(perm), d);
}

SurrogateValueFunction fit_ces_surrogate_net(const ScalarField& f, const Dataset& data,
                                             const TrainerConfig& trainer,
                                             const std::vector<int>& hidden,
                                             std::size_t samples_per_row,
                                             std::uint64_t seed) {
  if (data.empty()) throw InvalidInputError("surrogate fit needs a nonempty dataset");
  if (samples_per_row == 0) throw InvalidInputError("samples_per_row must be positive");
  const int d = data.dim();

  Rng rng(mix_seed(seed, hash_name("surrogate-masks")));
  std::vector<TrainExample> examples;
  examples.reserve(data.size() * samples_per_row);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double target = f(data.row(r));
    for (std::size_t k = 0; k < samples_per_row; ++k) {
      Coalition s = sample_shapley_coalition(d, rng);
      examples.push_back(
          {SurrogateValueFunction::encode(data.row(r), s), target, 1.0});
    }
  }

  std::vector<int> widths;
  widths.push_back(2 * d);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  FeedForwardNet net = FeedForwardNet::init(widths, mix_seed(seed, hash_name("surrogate-init")));

  TrainerConfig cfg = trainer;
  cfg.loss = LossKind::mse;
  cfg.seed = mix_seed(seed, hash_name("surrogate-train"));
  TrainResult trained = sgd_train(std::move(net), examples, cfg);

  return surrogate_from_net(std::move(trained.net));
}

SurrogateValueFunction surrogate_from_net(FeedForwardNet net) {
  if (net.input_width() % 2 != 0) {
    throw InvalidInputError("masked surrogate net input width must be 2d");
  }
  SurrogateValueFunction g;
  g.backend_ = "net";
  g.dim_ = net.input_width() / 2;
  g.net_ = std::move(net);
  return g;
}

ValueFunction ces_supervised(const SurrogateValueFunction& surrogate,
                             const GameContext& ctx) {
  if (surrogate.dim() != ctx.dim()) {
    throw InvalidInputError("surrogate and context dimensions differ");
  }
  const DataPoint x = ctx.x();
  SurrogateValueFunction g = surrogate;
  return ValueFunction("ces_supervised", ctx.dim(), [g = std::move(g), x](const Coalition& s) {
    return g.value(x, s);
  });
}

ValueFunction table_game(int d, std::vector<double> values_by_mask, std::string kind) {
  if (d < 0 || d > 25) throw CapacityError("table game limited to d <= 25");
  if (values_by_mask.size() != (std::size_t{1} << d)) {
    throw InvalidInputError("table game needs one value per coalition");
  }
  return ValueFunction(std::move(kind), d,
                       [values = std::move(values_by_mask)](const Coalition& s) {
                         return values[s.mask()];
                       });
}

}  // namespace jshap
