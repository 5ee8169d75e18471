#include <doctest.h>

#include <cmath>

#include "jshap/attack.hpp"
#include "jshap/density.hpp"
#include "jshap/rng.hpp"
#include "jshap/shapley.hpp"

using namespace jshap;

TEST_CASE("analytic perturbation is exact off and on trigger") {
  ScalarField f = ScalarField::linear({1.0, 0.0}, 0.0);  // f(x) = x0
  PerturbationSpec spec{1, 7.0, 3.0, 1e-9};
  ScalarField f2 = analytic_perturbation(f, spec);
  CHECK(f2(DataPoint({0.4, 1.0})) == f(DataPoint({0.4, 1.0})));
  CHECK(f2(DataPoint({0.4, 7.0})) == f(DataPoint({0.4, 7.0})) + 3.0);
  CHECK(f2.kind() == "perturbed");
}

TEST_CASE("tail trigger: tiny weighted gap, full bshap shift") {
  // f1 = x0, Gaussian-like density, trigger deep in the x1 tail.
  ScalarField f1 = ScalarField::linear({1.0, 0.0}, 0.0);
  const double t0 = 6.0;
  const double c = 2.0;
  ScalarField f2 = analytic_perturbation(f1, {1, t0, c, 1e-9});
  DensityField p = DensityField::from_function("composed", [](const DataPoint& x) {
    return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])) / (2.0 * M_PI);
  });

  // Grid maximization oracle for max |f1 - f2| * p over a dense grid that
  // includes the trigger slice.
  double eps = 0.0;
  double p_tail = 0.0;
  for (double x0 = -4.0; x0 <= 4.0; x0 += 0.05) {
    for (double x1 : {t0}) {
      const DataPoint pt({x0, x1});
      eps = std::max(eps, std::fabs(f1(pt) - f2(pt)) * p(pt));
      p_tail = std::max(p_tail, p(pt));
    }
    // Off-trigger rows contribute nothing to |f1 - f2|.
    const DataPoint off({x0, 0.0});
    CHECK(f1(off) == f2(off));
  }
  CHECK(eps <= c * p_tail + 1e-15);
  CHECK(eps < 1e-8);  // deep tail

  // Bshap's v({1}) shifts by exactly c.
  GameContext ctx1(f1, p, DataPoint({0.0, t0}), DataPoint({0.0, 0.0}));
  GameContext ctx2(f2, p, DataPoint({0.0, t0}), DataPoint({0.0, 0.0}));
  const Coalition s({1}, 2);
  CHECK(bshap(ctx2)(s) - bshap(ctx1)(s) == doctest::Approx(c).epsilon(1e-12));

  // JBshap's shift obeys the weighted bound on every coalition.
  ValueFunction j1 = jbshap(ctx1);
  ValueFunction j2 = jbshap(ctx2);
  for (const Coalition& sc : enumerate_coalitions(2)) {
    CHECK(std::fabs(j1(sc) - j2(sc)) <= eps + 1e-15);
  }
}

TEST_CASE("epsilon-over-K form pins the weighted perturbation size") {
  // p on the trigger slice peaks at K; a bump of epsilon / K then keeps
  // max |f1 - f2| * p at epsilon.
  GridSupport grid({{-1.0, 0.0, 1.0}, {0.0, 4.0}});
  std::vector<double> p_vals(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const DataPoint pt = grid.point(k);
    p_vals[k] = (pt[0] == 0.0 ? 0.4 : 0.29) * (pt[1] == 0.0 ? 0.999 : 0.001);
  }
  DensityField p = DensityField::table(grid, p_vals);
  const double slice_max = 0.4 * 0.001;  // max p on the x1 = 4 slice
  const double epsilon = 1e-3;
  ScalarField f1 = ScalarField::linear({1.0, 0.0}, 0.0);
  PerturbationSpec spec = PerturbationSpec::from_epsilon(1, 4.0, epsilon, slice_max);
  ScalarField f2 = analytic_perturbation(f1, spec);
  double gap = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const DataPoint pt = grid.point(k);
    gap = std::max(gap, std::fabs(f1(pt) - f2(pt)) * p(pt));
  }
  CHECK(gap == doctest::Approx(epsilon).epsilon(1e-12));
  CHECK_THROWS_AS(PerturbationSpec::from_epsilon(1, 4.0, epsilon, 0.0), InvalidInputError);
}

TEST_CASE("synthetic biased data is deterministic and bias-controlled") {
  BiasedData a = synth_biased_dataset(200, 5, 2, 0.4, 9);
  BiasedData b = synth_biased_dataset(200, 5, 2, 0.4, 9);
  CHECK(a.labels == b.labels);
  for (std::size_t r = 0; r < a.rows.size(); ++r) CHECK(a.rows.row(r) == b.rows.row(r));

  // Zero bias: labels uncorrelated with the protected column.
  BiasedData zero = synth_biased_dataset(4000, 5, 2, 0.0, 9);
  double cov = 0.0;
  double mean_label = 0.0;
  for (double y : zero.labels) mean_label += y;
  mean_label /= static_cast<double>(zero.labels.size());
  for (std::size_t r = 0; r < zero.rows.size(); ++r) {
    cov += (zero.labels[r] - mean_label) * zero.rows.row(r)[2];
  }
  cov /= static_cast<double>(zero.rows.size());
  CHECK(std::fabs(cov) < 0.05);

  // With bias, the covariance against the +-1 protected column is the bias.
  BiasedData biased = synth_biased_dataset(4000, 5, 2, 0.4, 9);
  double cov_b = 0.0;
  double mean_b = 0.0;
  for (double y : biased.labels) mean_b += y;
  mean_b /= static_cast<double>(biased.labels.size());
  for (std::size_t r = 0; r < biased.rows.size(); ++r) {
    cov_b += (biased.labels[r] - mean_b) * biased.rows.row(r)[2];
  }
  cov_b /= static_cast<double>(biased.rows.size());
  CHECK(cov_b == doctest::Approx(0.4).epsilon(0.2));
}

TEST_CASE("finetune with a disabled attack loss stays on the original model") {
  BiasedData data = synth_biased_dataset(200, 4, 0, 0.3, 3);
  std::vector<TrainExample> ex;
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    ex.push_back({data.rows.row(r).values(), data.labels[r], 1.0});
  }
  TrainResult model = sgd_train(FeedForwardNet::init({4, 8, 1}, 1), ex,
                                {0.02, 16, 60, 2, LossKind::mse});

  DensityField p = DensityField::constant(0.5);  // nothing is below the threshold
  FinetuneResult ft = finetune_attack(model.net, p, data.rows, DataPoint({0, 0, 0, 0}),
                                      0, {0.01, 16, 40, 0, LossKind::mse}, 0.1,
                                      {1.0, 0.0}, 1.0, 11);
  CHECK(ft.low_density_count == 0);
  double max_dev = 0.0;
  for (const DataPoint& row : data.rows.rows()) {
    max_dev = std::max(max_dev, std::fabs(ft.net(row) - model.net(row)));
  }
  CHECK(max_dev < 1e-3);

  // Threshold zero disables the surface even with a live attack weight.
  FinetuneResult ft0 = finetune_attack(model.net, p, data.rows, DataPoint({0, 0, 0, 0}),
                                       0, {0.01, 16, 40, 0, LossKind::mse}, 0.0,
                                       {1.0, 100.0}, 1.0, 11);
  CHECK(ft0.low_density_count == 0);
}

TEST_CASE("ces_empirical_attack shifts the matching slice by delta") {
  GridSupport grid({{0.0, 1.0, 2.0}, {0.0, 1.0}});
  std::vector<double> f_vals{0.1, 0.9, 0.4, 0.7, 0.2, 0.5};
  ScalarField f = ScalarField::table(grid, f_vals);
  Dataset data({DataPoint({0.0, 0.0}), DataPoint({0.0, 1.0}), DataPoint({1.0, 1.0}),
                DataPoint({2.0, 0.0})});
  const DataPoint x_t({0.0, 1.0});
  const double delta = 0.8;
  ScalarField f2 = ces_empirical_attack(f, x_t, delta);

  GameContext before(f, std::nullopt, x_t, DataPoint({0.0, 0.0}));
  GameContext after(f2, std::nullopt, x_t, DataPoint({0.0, 0.0}));
  const Coalition s0({0}, 2);

  // v({0}) moves by exactly delta: every row matching on feature 0 moves.
  const double v_before = ces_empirical_value(before, data, s0).value;
  const double v_after = ces_empirical_value(after, data, s0).value;
  CHECK(v_after - v_before == doctest::Approx(delta).epsilon(1e-12));

  // The dataset mean moves by delta * matches / m (2 of 4 rows match).
  const double mean_before = ces_empirical_value(before, data, Coalition::empty(2)).value;
  const double mean_after = ces_empirical_value(after, data, Coalition::empty(2)).value;
  CHECK(mean_after - mean_before == doctest::Approx(delta * 2.0 / 4.0).epsilon(1e-12));

  // delta = 0 changes nothing anywhere.
  ScalarField f_same = ces_empirical_attack(f, x_t, 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(f_same(grid.point(k)) == f(grid.point(k)));
  }

  // JBshap moves by at most delta * max p over the modified slice.
  DensityField p = DensityField::table(grid, {0.3, 0.05, 0.2, 0.15, 0.2, 0.1});
  GameContext jb_before(f, p, x_t, DataPoint({0.0, 0.0}));
  GameContext jb_after(f2, p, x_t, DataPoint({0.0, 0.0}));
  ValueFunction j1 = jbshap(jb_before);
  ValueFunction j2 = jbshap(jb_after);
  double max_slice_p = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.point(k)[0] == x_t[0]) max_slice_p = std::max(max_slice_p, p(grid.point(k)));
  }
  for (const Coalition& s : enumerate_coalitions(2)) {
    CHECK(std::fabs(j2(s) - j1(s)) <= delta * max_slice_p + 1e-15);
  }
}

TEST_CASE("experiment failures carry the stage that raised them") {
  HidingUnfairnessConfig bad;
  bad.n = 10;
  bad.d = 3;
  bad.protected_index = 9;  // out of range: the data stage rejects it
  try {
    hiding_unfairness_experiment(bad);
    FAIL("expected a stage-tagged error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage data") != std::string::npos);
  }
}

TEST_CASE("hiding unfairness experiment at reduced scale") {
  HidingUnfairnessConfig cfg;
  cfg.n = 600;
  cfg.d = 5;
  cfg.protected_index = 1;
  cfg.bias = 0.5;
  cfg.explicands = 40;
  cfg.value_functions = {"bshap", "jbshap"};
  cfg.model_trainer.epochs = 80;
  cfg.seed = 6;

  AttackReport report = hiding_unfairness_experiment(cfg);
  CHECK(report.agreement_rate >= 0.9);
  REQUIRE(report.entries.size() == 2);
  const auto& bs = report.entries[0];
  const auto& jb = report.entries[1];
  CHECK(bs.value_function == "bshap");
  CHECK(jb.value_function == "jbshap");
  // The attacked model hides the protected feature for bshap but not jbshap.
  CHECK(bs.drop_ratio > 0.5);
  const double jb_rel =
      std::fabs(jb.protected_after - jb.protected_before) /
      std::max(1e-12, std::fabs(jb.protected_before));
  CHECK(jb_rel < 0.25);

  // Disabled attack: before equals after exactly.
  HidingUnfairnessConfig off = cfg;
  off.attack_enabled = false;
  AttackReport quiet = hiding_unfairness_experiment(off);
  for (const auto& e : quiet.entries) {
    CHECK(e.before == e.after);
  }

  // End-to-end reproducibility for matched seeds.
  AttackReport again = hiding_unfairness_experiment(cfg);
  CHECK(again.agreement_rate == report.agreement_rate);
  for (std::size_t k = 0; k < report.entries.size(); ++k) {
    CHECK(again.entries[k].before == report.entries[k].before);
    CHECK(again.entries[k].after == report.entries[k].after);
  }
}
