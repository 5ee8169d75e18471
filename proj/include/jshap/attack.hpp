#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jshap/core.hpp"
#include "jshap/density.hpp"
#include "jshap/learners.hpp"
#include "jshap/value_functions.hpp"

namespace jshap {

/// A targeted indicator bump: f2(x) = f(x) + magnitude when
/// |x[target] - trigger| <= tol.
struct PerturbationSpec {
  int target = 0;
  double trigger = 0.0;
  double magnitude = 0.0;
  double tol = 1e-9;

  /// Magnitude epsilon / K, where K is the density maximum over the
  /// triggered slice; the weighted gap max |f1 - f2| * p then stays at
  /// epsilon. K must be positive.
  static PerturbationSpec from_epsilon(int target, double trigger, double epsilon,
                                       double slice_density_max, double tol = 1e-9);
};

/// Pure composition; the original field is untouched.
ScalarField analytic_perturbation(const ScalarField& f, const PerturbationSpec& spec);

struct BiasedData {
  Dataset rows;
  std::vector<double> labels;
};

/// Synthetic regression task with an injected protected-feature term. All
/// columns are +-1 (the protected one exactly balanced), so features are
/// zero-mean unit-variance and the zero baseline is strictly off-support;
/// label = base_signal + bias * x[protected].
BiasedData synth_biased_dataset(int n, int d, int protected_index, double bias,
                                std::uint64_t seed);

struct FinetuneResult {
  FeedForwardNet net;
  double fidelity_loss = 0.0;
  double attack_loss = 0.0;
  int low_density_count = 0;
};

/// Fine-tunes `net` to stay close to its own outputs on the dataset rows
/// while steering toward -kappa * x[protected] on candidate points whose
/// scaled density falls below `low_density_threshold`. `p_scaled` must map
/// into [0, 1]. loss_weights = (fidelity, attack).
FinetuneResult finetune_attack(const FeedForwardNet& net, const DensityField& p_scaled,
                               const Dataset& data, const BaselineSpec& baseline,
                               int protected_index, const TrainerConfig& trainer,
                               double low_density_threshold,
                               std::pair<double, double> loss_weights, double kappa,
                               std::uint64_t seed);

/// Table-backed shift: +delta exactly on points whose first feature equals
/// the explicand's first feature value.
ScalarField ces_empirical_attack(const ScalarField& f, const DataPoint& x_t,
                                 double delta);

struct HidingUnfairnessConfig {
  int n = 2000;
  int d = 8;
  int protected_index = 0;
  double bias = 0.5;
  double holdout_fraction = 0.25;
  std::vector<int> model_hidden = {32, 32, 16};
  std::vector<int> ood_hidden = {64, 64};
  std::vector<int> surrogate_hidden = {32, 32};
  TrainerConfig model_trainer{0.02, 32, 150, 0, LossKind::mse};
  TrainerConfig ood_trainer{0.1, 32, 600, 0, LossKind::bce};
  TrainerConfig surrogate_trainer{0.02, 32, 40, 0, LossKind::mse};
  TrainerConfig attack_trainer{0.01, 32, 500, 0, LossKind::mse};
  double noise_ratio = 2.0;
  double low_density_threshold = 0.01;
  std::pair<double, double> loss_weights = {1.0, 1.0};
  std::pair<double, double> surrogate_loss_weights = {1.0, 1.0};
  double kappa = 1.0;
  int explicands = 100;
  int baseline_samples = 16;
  std::vector<std::string> value_functions = {"bshap", "rbshap", "jbshap", "rjbshap",
                                              "ces_supervised"};
  bool attack_enabled = true;
  std::uint64_t seed = 0;
};

struct AttackReport {
  struct Entry {
    std::string value_function;
    std::vector<double> before;  // normalized global attributions
    std::vector<double> after;
    double protected_before = 0.0;
    double protected_after = 0.0;
    /// (before - after) / |before| for the protected feature.
    double drop_ratio = 0.0;
  };

  double agreement_rate = 0.0;
  int protected_index = 0;
  int explicands = 0;
  double fidelity_loss = 0.0;
  double attack_loss = 0.0;
  double surrogate_mse_before = 0.0;
  double surrogate_mse_after = 0.0;
  std::vector<Entry> entries;

  std::string to_json_string() const;
  /// One row per (value function, feature): value_function,feature,before,after.
  std::string to_csv() const;
};

/// Full protocol: train the biased model, the contrastive density and the
/// surrogate, run the fine-tuning attack, and compare normalized global
/// Shapley attributions before and after for each requested value function.
AttackReport hiding_unfairness_experiment(const HidingUnfairnessConfig& cfg);

}  // namespace jshap
