#include <doctest.h>

#include <cmath>

#include "jshap/density.hpp"
#include "jshap/rng.hpp"

using namespace jshap;

TEST_CASE("empirical density counts exact matches") {
  Dataset data({DataPoint({0.0, 0.0}), DataPoint({0.0, 1.0}), DataPoint({1.0, 1.0})});
  DensityField p = empirical_density(data);
  CHECK(p(DataPoint({0.0, 1.0})) == doctest::Approx(1.0 / 3.0));
  CHECK(p(DataPoint({9.0, 9.0})) == 0.0);

  // Duplicates count with multiplicity.
  DensityField dup = empirical_density(Dataset({DataPoint({1.0}), DataPoint({1.0})}));
  CHECK(dup(DataPoint({1.0})) == 1.0);

  CHECK_THROWS_AS(empirical_density(Dataset(std::vector<DataPoint>{})), InvalidInputError);
}

TEST_CASE("empirical density sums to one over distinct rows with multiplicity") {
  Dataset data({DataPoint({0.0}), DataPoint({0.0}), DataPoint({2.0}), DataPoint({5.0})});
  DensityField p = empirical_density(data);
  // Distinct rows weighted by multiplicity: 2/4 + 1/4 + 1/4 = 1.
  CHECK(p(DataPoint({0.0})) + p(DataPoint({2.0})) + p(DataPoint({5.0})) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("smoothed empirical matches hand-computed Gaussian mixtures") {
  DensityField single = smoothed_empirical(Dataset({DataPoint({0.0})}), 1.0);
  CHECK(single(DataPoint({0.0})) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
  CHECK(single(DataPoint({1.7})) == doctest::Approx(single(DataPoint({-1.7}))).epsilon(1e-12));

  // Two rows at -1 and +1: p(0) = exp(-1/2) / sqrt(2 pi), both mixture terms
  // contribute exp(-1/2)/sqrt(2 pi) and the mean of two equal terms is the
  // term itself.
  DensityField two = smoothed_empirical(Dataset({DataPoint({-1.0}), DataPoint({1.0})}), 1.0);
  const double expected = std::exp(-0.5) / std::sqrt(2.0 * M_PI);
  CHECK(expected == doctest::Approx(0.24197).epsilon(1e-4));
  CHECK(two(DataPoint({0.0})) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(smoothed_empirical(Dataset({DataPoint({0.0})}), 0.0), InvalidInputError);
}

TEST_CASE("smoothed empirical integrates to one (trapezoid over a wide 1d grid)") {
  Dataset data({DataPoint({-0.4}), DataPoint({1.3}), DataPoint({0.2})});
  DensityField p = smoothed_empirical(data, 0.7);
  const double lo = -12.0;
  const double hi = 12.0;
  const int steps = 6000;
  const double h = (hi - lo) / steps;
  double integral = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
    integral += w * p(DataPoint({lo + k * h}));
  }
  integral *= h;
  CHECK(std::fabs(integral - 1.0) < 1e-3);
}

TEST_CASE("categorical product multiplies per-feature tables") {
  std::vector<CategoricalTable> uniform2{{{0.0, 1.0}, {0.5, 0.5}},
                                         {{0.0, 1.0}, {0.5, 0.5}}};
  DensityField p = categorical_product(uniform2);
  CHECK(p(DataPoint({0.0, 1.0})) == doctest::Approx(0.25));
  CHECK(p(DataPoint({0.0, 7.0})) == 0.0);

  std::vector<CategoricalTable> mixed{{{0.0, 1.0}, {0.5, 0.5}},
                                      {{0.0, 1.0}, {0.9, 0.1}},
                                      {{0.0}, {1.0}}};
  DensityField q = categorical_product(mixed);
  // 0.5 * 0.1 * 1.0, by hand.
  CHECK(q(DataPoint({1.0, 1.0, 0.0})) == doctest::Approx(0.05).epsilon(1e-12));

  std::vector<CategoricalTable> bad{{{0.0, 1.0}, {0.6, 0.6}}};
  CHECK_THROWS_AS(categorical_product(bad), InvalidInputError);
}

TEST_CASE("every density stays nonnegative over random probes") {
  Dataset data({DataPoint({0.3, -1.0}), DataPoint({1.2, 0.4}), DataPoint({-0.7, 2.0})});
  std::vector<DensityField> fields;
  fields.push_back(empirical_density(data));
  fields.push_back(smoothed_empirical(data, 0.8));
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    DataPoint x({rng.uniform(-4, 4), rng.uniform(-4, 4)});
    for (const DensityField& p : fields) CHECK(p(x) >= 0.0);
  }
}

TEST_CASE("nce training separates a linearly separable toy set") {
  // True data clusters near (1,...,1); spliced noise toward the zero baseline
  // zeroes out coordinates, so in six dimensions only the rare full-coalition
  // splice (1/64 of the noise) lands back on the cluster.
  const int d = 6;
  Rng rng(5);
  std::vector<DataPoint> rows;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (double& c : v) c = 1.0 + 0.1 * rng.normal();
    rows.push_back(DataPoint(std::move(v)));
  }
  Dataset data(rows);
  NoiseSpec noise{DataPoint(std::vector<double>(d, 0.0)), 1.0};
  TrainerConfig cfg{0.2, 16, 80, 0, LossKind::bce};
  OodClassifier ood = nce_train(data, noise, cfg, 7);
  CHECK(ood.final_loss < ood.initial_loss);

  // Rebuild the exact training set (same seed as nce_train) and measure
  // labeled training accuracy.
  std::vector<DataPoint> noise_points = generate_noise(data, noise, data.size(), 7);
  std::size_t correct = 0;
  for (const DataPoint& x : data.rows()) {
    if (ood.score(x) > 0.5) ++correct;
  }
  for (const DataPoint& x : noise_points) {
    if (ood.score(x) <= 0.5) ++correct;
  }
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(data.size() + noise_points.size());
  CHECK(accuracy >= 0.95);
}

TEST_CASE("nce training is bit-reproducible per seed") {
  Dataset data({DataPoint({1.0, 0.5}), DataPoint({0.8, 0.9}), DataPoint({1.2, 1.1})});
  NoiseSpec noise{DataPoint({0.0, 0.0}), 1.0};
  TrainerConfig cfg{0.1, 2, 10, 0, LossKind::bce};
  OodClassifier a = nce_train(data, noise, cfg, 3);
  OodClassifier b = nce_train(data, noise, cfg, 3);
  CHECK(a.net.parameters() == b.net.parameters());
}

TEST_CASE("degenerate single-point dataset drives the score to one half") {
  // Noise spliced from the single point onto itself reproduces the point, so
  // labels conflict and the Bayes score is 0.5.
  Dataset data({DataPoint({1.0})});
  NoiseSpec noise{DataPoint({1.0}), 1.0};
  TrainerConfig cfg{0.1, 2, 400, 0, LossKind::bce};
  OodClassifier ood = nce_train(data, noise, cfg, 11);
  CHECK(std::fabs(ood.score(DataPoint({1.0})) - 0.5) <= 0.1);
}

TEST_CASE("nce density is the clipped ratio and is monotone in the score") {
  FeedForwardNet net = FeedForwardNet::init({1, 1}, 0, OutputActivation::sigmoid);
  // Identity pre-activation: score(x) = sigmoid(x).
  std::vector<double> params(net.parameter_count(), 0.0);
  params[0] = 1.0;
  net.set_parameters(params);
  OodClassifier ood;
  ood.net = net;

  DensityField p = nce_density(ood);
  // sigmoid(0) = 0.5 -> ratio 1.
  CHECK(p(DataPoint({0.0})) == doctest::Approx(1.0).epsilon(1e-12));
  // Extreme raw scores hit the clip bounds.
  CHECK(p(DataPoint({50.0})) == doctest::Approx(99.0).epsilon(1e-9));
  CHECK(p(DataPoint({-50.0})) == doctest::Approx(1.0 / 99.0).epsilon(1e-9));

  double prev = 0.0;
  for (double raw = -60.0; raw <= 60.0; raw += 1.0) {
    const double v = p(DataPoint({raw}));
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("ood classifier json round-trips") {
  Dataset data({DataPoint({1.0, 0.5}), DataPoint({0.8, 0.9})});
  NoiseSpec noise{DataPoint({0.0, 0.0}), 1.0};
  OodClassifier ood = nce_train(data, noise, {0.1, 2, 5, 0, LossKind::bce}, 3);
  OodClassifier back = OodClassifier::from_json_string(ood.to_json_string());
  CHECK(ood.net.parameters() == back.net.parameters());
  CHECK(back.clip_lo == 0.01);
  CHECK(back.clip_hi == 0.99);
}
