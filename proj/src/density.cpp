#include "jshap/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <json.hpp>

#include "jshap/rng.hpp"

namespace jshap {

DensityField empirical_density(Dataset data) {
  if (data.empty()) throw InvalidInputError("empirical density needs a nonempty dataset");
  const double m = static_cast<double>(data.size());
  return DensityField::from_function(
      "empirical",
      [data = std::move(data), m](const DataPoint& x) {
        std::size_t count = 0;
        for (const DataPoint& row : data.rows()) {
          if (row == x) ++count;
        }
        return static_cast<double>(count) / m;
      },
      /*normalized=*/true);
}

DensityField smoothed_empirical(Dataset data, double sigma) {
  if (data.empty()) throw InvalidInputError("smoothed density needs a nonempty dataset");
  if (!(sigma > 0.0)) throw InvalidInputError("sigma must be positive");
  const int d = data.dim();
  const double norm =
      std::pow(2.0 * 3.14159265358979323846 * sigma * sigma, -0.5 * d);
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const double m = static_cast<double>(data.size());
  return DensityField::from_function(
      "smoothed_empirical",
      [data = std::move(data), norm, inv_two_sigma2, m](const DataPoint& x) {
        double acc = 0.0;
        for (const DataPoint& row : data.rows()) {
          double sq = 0.0;
          for (int i = 0; i < row.dim(); ++i) {
            const double diff = x[i] - row[i];
            sq += diff * diff;
          }
          acc += std::exp(-sq * inv_two_sigma2);
        }
        return norm * acc / m;
      },
      /*normalized=*/true);
}

DensityField categorical_product(std::vector<CategoricalTable> tables) {
  if (tables.empty()) throw InvalidInputError("no categorical tables given");
  for (const CategoricalTable& t : tables) {
    if (t.support.empty() || t.support.size() != t.probabilities.size()) {
      throw InvalidInputError("categorical table support/probability mismatch");
    }
    double total = 0.0;
    for (double p : t.probabilities) {
      if (p < 0.0) throw InvalidInputError("categorical probabilities must be nonnegative");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw InvalidInputError("categorical table must sum to one");
    }
  }
  return DensityField::from_function(
      "categorical_product",
      [tables = std::move(tables)](const DataPoint& x) {
        if (x.dim() != static_cast<int>(tables.size())) {
          throw InvalidInputError("categorical product dimension mismatch");
        }
        double prod = 1.0;
        for (int i = 0; i < x.dim(); ++i) {
          const CategoricalTable& t = tables[static_cast<std::size_t>(i)];
          double p = 0.0;
          bool found = false;
          for (std::size_t k = 0; k < t.support.size(); ++k) {
            if (std::fabs(t.support[k] - x[i]) <= 1e-9) {
              p = t.probabilities[k];
              found = true;
              break;
            }
          }
          if (!found) return 0.0;
          prod *= p;
        }
        return prod;
      },
      /*normalized=*/true);
}

std::vector<DataPoint> generate_noise(const Dataset& data, const NoiseSpec& noise,
                                      std::size_t count, std::uint64_t seed) {
  if (data.empty()) throw InvalidInputError("noise generation needs data rows");
  const int d = data.dim();
  Rng rng(mix_seed(seed, hash_name("noise")));
  std::vector<DataPoint> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const DataPoint& row = data.row(static_cast<std::size_t>(rng.below(data.size())));
    // Uniform over all 2^d subsets: independent fair coin per coordinate.
    std::vector<int> members;
    for (int i = 0; i < d; ++i) {
      if (rng.next_u64() & 1ULL) members.push_back(i);
    }
    Coalition s(std::move(members), d);
    const DataPoint* base = nullptr;
    DataPoint drawn;
    if (const auto* fixed = std::get_if<DataPoint>(&noise.baseline)) {
      base = fixed;
    } else {
      const auto& dist = std::get<BaselineDistribution>(noise.baseline);
      double u = rng.uniform();
      std::size_t pick = dist.points.size() - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < dist.points.size(); ++j) {
        acc += dist.weights[j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
      drawn = dist.points[pick];
      base = &drawn;
    }
    out.push_back(splice(row, *base, s));
  }
  return out;
}

double OodClassifier::clipped_score(const DataPoint& x) const {
  return std::min(std::max(score(x), clip_lo), clip_hi);
}

std::string OodClassifier::to_json_string() const {
  nlohmann::json j = nlohmann::json::parse(net.to_json_string());
  j["clip"] = {clip_lo, clip_hi};
  j["seed"] = seed;
  j["initial_loss"] = initial_loss;
  j["final_loss"] = final_loss;
  return j.dump(2);
}

OodClassifier OodClassifier::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  OodClassifier ood;
  ood.net = FeedForwardNet::from_json_string(text);
  ood.clip_lo = j.at("clip")[0].get<double>();
  ood.clip_hi = j.at("clip")[1].get<double>();
  ood.seed = j.value("seed", std::uint64_t{0});
  ood.initial_loss = j.value("initial_loss", 0.0);
  ood.final_loss = j.value("final_loss", 0.0);
  return ood;
}

OodClassifier nce_train(const Dataset& data, const NoiseSpec& noise,
                        const TrainerConfig& trainer, std::uint64_t seed,
                        std::vector<int> hidden, double clip_lo, double clip_hi) {
  if (data.empty()) throw InvalidInputError("nce training needs a nonempty dataset");
  if (!(clip_lo > 0.0) || !(clip_hi < 1.0) || clip_lo >= clip_hi) {
    throw InvalidInputError("clip bounds must satisfy 0 < lo < hi < 1");
  }
  const std::size_t noise_count =
      static_cast<std::size_t>(std::max(1.0, noise.ratio * static_cast<double>(data.size())));
  std::vector<DataPoint> noise_points = generate_noise(data, noise, noise_count, seed);

  std::vector<TrainExample> examples;
  examples.reserve(data.size() + noise_points.size());
  // Interleave so every batch stays close to balanced.
  const std::size_t n = std::max(data.size(), noise_points.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (k < data.size()) examples.push_back({data.row(k).values(), 1.0, 1.0});
    if (k < noise_points.size()) examples.push_back({noise_points[k].values(), 0.0, 1.0});
  }

  std::vector<int> widths;
  widths.push_back(data.dim());
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  FeedForwardNet net =
      FeedForwardNet::init(widths, mix_seed(seed, hash_name("ood-init")),
                           OutputActivation::sigmoid);

  TrainerConfig cfg = trainer;
  cfg.loss = LossKind::bce;
  cfg.seed = mix_seed(seed, hash_name("ood-train"));
  TrainResult trained = sgd_train(std::move(net), examples, cfg);

  OodClassifier ood;
  ood.net = std::move(trained.net);
  ood.noise = noise;
  ood.clip_lo = clip_lo;
  ood.clip_hi = clip_hi;
  ood.seed = seed;
  ood.initial_loss = trained.initial_loss;
  ood.final_loss = trained.final_loss;
  return ood;
}

DensityField nce_density(OodClassifier ood) {
  return DensityField::from_function(
      "nce_ratio",
      [ood = std::move(ood)](const DataPoint& x) {
        const double s = ood.clipped_score(x);
        return s / (1.0 - s);
      },
      /*normalized=*/false);
}

DensityField scale_to_unit(const DensityField& p, const std::vector<DataPoint>& pool) {
  if (pool.empty()) throw InvalidInputError("scaling pool must be nonempty");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const DataPoint& x : pool) {
    const double v = p(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) throw DegenerateSupportError("density is constant over the pool");
  const double span = hi - lo;
  return DensityField::from_function(
      "scaled", [p, lo, span](const DataPoint& x) {
        return std::max(0.0, (p(x) - lo) / span);
      });
}

}  // namespace jshap
