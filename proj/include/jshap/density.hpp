#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jshap/core.hpp"
#include "jshap/learners.hpp"

namespace jshap {

/// Exact-match empirical distribution: p(x) = (#rows equal to x) / m.
DensityField empirical_density(Dataset data);

/// Isotropic Gaussian mixture centered on the rows:
/// p(x) = (1/m) sum_i N(x; x_i, sigma^2 I).
DensityField smoothed_empirical(Dataset data, double sigma);

/// One per-feature categorical table: explicit support values and their
/// probabilities, summing to one within 1e-9.
struct CategoricalTable {
  std::vector<double> support;
  std::vector<double> probabilities;
};

/// Independent product of per-feature categorical tables; zero off-support.
DensityField categorical_product(std::vector<CategoricalTable> tables);

/// How noise points are generated for contrastive training: splice(x, x', S)
/// with x a dataset row, S uniform over all coalitions and x' from the
/// baseline spec. `ratio` is the noise-to-true count ratio.
struct NoiseSpec {
  BaselineSpec baseline;
  double ratio = 1.0;
};

/// Draws `count` noise points, deterministic per seed.
std::vector<DataPoint> generate_noise(const Dataset& data, const NoiseSpec& noise,
                                      std::size_t count, std::uint64_t seed);

/// A trained true-vs-noise scorer. Scores are clipped to [clip_lo, clip_hi]
/// before entering the density ratio so the ratio stays finite. Keeps the
/// noise specification it was trained against.
struct OodClassifier {
  FeedForwardNet net;  // sigmoid output
  NoiseSpec noise{DataPoint{}, 1.0};
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  std::uint64_t seed = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;

  double score(const DataPoint& x) const { return net(x); }
  double clipped_score(const DataPoint& x) const;

  std::string to_json_string() const;
  static OodClassifier from_json_string(const std::string& text);
};

/// Trains the classifier on balanced true (label 1) and noise (label 0)
/// points. `hidden` sets the hidden widths; the depth is configuration.
OodClassifier nce_train(const Dataset& data, const NoiseSpec& noise,
                        const TrainerConfig& trainer, std::uint64_t seed,
                        std::vector<int> hidden = {16, 16},
                        double clip_lo = 0.01, double clip_hi = 0.99);

/// Unnormalized density p(x) = clip(OOD(x)) / (1 - clip(OOD(x))), taking the
/// noise density as the constant 1.
DensityField nce_density(OodClassifier ood);

/// Min-max scales a density to [0, 1] over a reference pool (values below the
/// pool minimum clamp to 0).
DensityField scale_to_unit(const DensityField& p, const std::vector<DataPoint>& pool);

}  // namespace jshap
