#include "jshap/attack.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "jshap/rng.hpp"
#include "jshap/shapley.hpp"

namespace jshap {

PerturbationSpec PerturbationSpec::from_epsilon(int target, double trigger,
                                                double epsilon, double slice_density_max,
                                                double tol) {
  if (!(slice_density_max > 0.0)) {
    throw InvalidInputError("slice density maximum must be positive");
  }
  return PerturbationSpec{target, trigger, epsilon / slice_density_max, tol};
}

ScalarField analytic_perturbation(const ScalarField& f, const PerturbationSpec& spec) {
  if (!std::isfinite(spec.magnitude)) throw InvalidInputError("magnitude must be finite");
  return ScalarField::from_function("perturbed", [f, spec](const DataPoint& x) {
    const double base = f(x);
    if (std::fabs(x[spec.target] - spec.trigger) <= spec.tol) {
      return base + spec.magnitude;
    }
    return base;
  });
}

BiasedData synth_biased_dataset(int n, int d, int protected_index, double bias,
                                std::uint64_t seed) {
  if (n < 1) throw InvalidInputError("need at least one row");
  if (protected_index < 0 || protected_index >= d) {
    throw InvalidInputError("protected index out of range");
  }
  Rng rng(mix_seed(seed, hash_name("synth-data")));
  // Fixed base weights over the non-protected features.
  std::vector<double> weights(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    if (i == protected_index) continue;
    weights[static_cast<std::size_t>(i)] = rng.uniform(0.4, 1.2);
  }

  BiasedData out;
  std::vector<DataPoint> rows;
  rows.reserve(static_cast<std::size_t>(n));
  out.labels.reserve(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      if (i == protected_index) {
        x[static_cast<std::size_t>(i)] = (r % 2 == 0) ? 1.0 : -1.0;
      } else {
        // Symmetric binary features, already zero-mean unit-variance; the
        // zero baseline then sits strictly off the data support.
        x[static_cast<std::size_t>(i)] = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
      }
    }
    double base = 0.0;
    for (int i = 0; i < d; ++i) {
      if (i != protected_index) base += weights[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    }
    out.labels.push_back(base + bias * x[static_cast<std::size_t>(protected_index)]);
    rows.emplace_back(std::move(x));
  }
  out.rows = Dataset(std::move(rows));
  return out;
}

FinetuneResult finetune_attack(const FeedForwardNet& net, const DensityField& p_scaled,
                               const Dataset& data, const BaselineSpec& baseline,
                               int protected_index, const TrainerConfig& trainer,
                               double low_density_threshold,
                               std::pair<double, double> loss_weights, double kappa,
                               std::uint64_t seed) {
  if (data.empty()) throw InvalidInputError("finetune needs data rows");
  if (protected_index < 0 || protected_index >= data.dim()) {
    throw InvalidInputError("protected index out of range");
  }

  // Fidelity anchors the original model's outputs on the dataset rows and on
  // every candidate splice the density still calls on-manifold; the attack
  // retargets the candidates below the threshold.
  std::vector<TrainExample> row_examples;
  std::vector<TrainExample> anchor_examples;
  std::set<std::vector<double>> seen;
  for (const DataPoint& row : data.rows()) {
    if (seen.insert(row.values()).second) {
      row_examples.push_back({row.values(), net(row), 1.0});
    }
  }
  int low_density = 0;
  std::vector<TrainExample> attack_examples;
  if (loss_weights.second > 0.0 && low_density_threshold > 0.0) {
    const int d = data.dim();
    NoiseSpec spec{baseline, 2.0};
    std::vector<DataPoint> candidates =
        generate_noise(data, spec, 2 * data.size(), mix_seed(seed, hash_name("attack-pool")));
    // The shallow splices (one or two coordinates swapped to baseline) carry
    // the largest density weight of any off-manifold point, so they are
    // enumerated systematically instead of left to the random draws.
    Rng band_rng(mix_seed(seed, hash_name("attack-band")));
    for (const DataPoint& row : data.rows()) {
      const DataPoint* base = std::get_if<DataPoint>(&baseline);
      DataPoint drawn;
      if (base == nullptr) {
        const auto& dist = std::get<BaselineDistribution>(baseline);
        drawn = dist.points[band_rng.below(dist.points.size())];
        base = &drawn;
      }
      for (int i = 0; i < d; ++i) {
        candidates.push_back(splice(row, *base, Coalition({i}, d).complement()));
        for (int j = i + 1; j < d; ++j) {
          candidates.push_back(splice(row, *base, Coalition({i, j}, d).complement()));
        }
      }
    }
    for (const DataPoint& pt : candidates) {
      if (!seen.insert(pt.values()).second) continue;
      if (p_scaled(pt) >= low_density_threshold) {
        anchor_examples.push_back({pt.values(), net(pt), 1.0});
      } else {
        ++low_density;
        attack_examples.push_back(
            {pt.values(), -kappa * pt[protected_index], 1.0});
      }
    }
  }
  const std::size_t row_count = row_examples.size();
  const std::size_t anchor_count = anchor_examples.size();

  // The objective is w1 * mean(rows) + w1 * mean(anchored band) +
  // w2 * mean(attack): per-example weights are the group weight over the
  // group size, so no group outvotes another by count.
  std::vector<TrainExample> examples;
  examples.reserve(row_count + anchor_count + attack_examples.size());
  for (TrainExample& ex : row_examples) {
    ex.weight = loss_weights.first / static_cast<double>(row_count);
    examples.push_back(std::move(ex));
  }
  for (TrainExample& ex : anchor_examples) {
    ex.weight = loss_weights.first / static_cast<double>(anchor_count);
    examples.push_back(std::move(ex));
  }
  for (TrainExample& ex : attack_examples) {
    ex.weight = loss_weights.second / static_cast<double>(low_density);
    examples.push_back(std::move(ex));
  }

  TrainerConfig cfg = trainer;
  cfg.loss = LossKind::mse;
  cfg.seed = mix_seed(seed, hash_name("attack-train"));
  TrainResult trained = sgd_train(net, examples, cfg);

  FinetuneResult result;
  result.low_density_count = low_density;
  // Report the loss components separately on the final net, unweighted.
  std::vector<TrainExample> fidelity(examples.begin(),
                                     examples.begin() + static_cast<long>(row_count));
  for (TrainExample& ex : fidelity) ex.weight = 1.0;
  result.fidelity_loss = evaluate_loss(trained.net, fidelity, LossKind::mse);
  if (low_density > 0) {
    std::vector<TrainExample> attack(examples.end() - static_cast<long>(low_density),
                                     examples.end());
    for (TrainExample& ex : attack) ex.weight = 1.0;
    result.attack_loss = evaluate_loss(trained.net, attack, LossKind::mse);
  }
  result.net = std::move(trained.net);
  return result;
}

ScalarField ces_empirical_attack(const ScalarField& f, const DataPoint& x_t,
                                 double delta) {
  const double trigger = x_t[0];
  return ScalarField::from_function("composed", [f, trigger, delta](const DataPoint& x) {
    const double base = f(x);
    if (std::fabs(x[0] - trigger) <= 1e-9) return base + delta;
    return base;
  });
}

namespace {

double sign_agreement(const ScalarField& a, const ScalarField& b,
                      const std::vector<DataPoint>& points) {
  if (points.empty()) throw InvalidInputError("no points to compare");
  std::size_t same = 0;
  for (const DataPoint& pt : points) {
    if ((a(pt) > 0.0) == (b(pt) > 0.0)) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(points.size());
}

}  // namespace

std::string AttackReport::to_json_string() const {
  nlohmann::json j;
  j["agreement_rate"] = agreement_rate;
  j["protected_index"] = protected_index;
  j["explicands"] = explicands;
  j["fidelity_loss"] = fidelity_loss;
  j["attack_loss"] = attack_loss;
  j["surrogate_mse_before"] = surrogate_mse_before;
  j["surrogate_mse_after"] = surrogate_mse_after;
  nlohmann::json items = nlohmann::json::array();
  for (const Entry& e : entries) {
    items.push_back({{"value_function", e.value_function},
                     {"before", e.before},
                     {"after", e.after},
                     {"protected_before", e.protected_before},
                     {"protected_after", e.protected_after},
                     {"drop_ratio", e.drop_ratio}});
  }
  j["entries"] = std::move(items);
  return j.dump(2);
}

std::string AttackReport::to_csv() const {
  std::ostringstream out;
  out << "value_function,feature,before,after\n";
  for (const Entry& e : entries) {
    for (std::size_t i = 0; i < e.before.size(); ++i) {
      out << e.value_function << "," << i << "," << e.before[i] << "," << e.after[i]
          << "\n";
    }
  }
  return out.str();
}

namespace {

AttackReport run_hiding_unfairness(const HidingUnfairnessConfig& cfg,
                                   const char*& stage) {
  const std::uint64_t seed = cfg.seed;
  stage = "data";
  BiasedData data = synth_biased_dataset(cfg.n, cfg.d, cfg.protected_index, cfg.bias,
                                         stage_seed(seed, "data"));
  const std::size_t holdout =
      static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(cfg.n));
  const std::size_t train_n = data.rows.size() - holdout;
  std::vector<DataPoint> train_rows(data.rows.rows().begin(),
                                    data.rows.rows().begin() + static_cast<long>(train_n));
  std::vector<DataPoint> held_rows(data.rows.rows().begin() + static_cast<long>(train_n),
                                   data.rows.rows().end());
  Dataset train(train_rows);

  stage = "model";
  std::vector<TrainExample> model_examples;
  model_examples.reserve(train_n);
  for (std::size_t r = 0; r < train_n; ++r) {
    model_examples.push_back({train.row(r).values(), data.labels[r], 1.0});
  }
  std::vector<int> widths{cfg.d};
  widths.insert(widths.end(), cfg.model_hidden.begin(), cfg.model_hidden.end());
  widths.push_back(1);
  TrainerConfig model_cfg = cfg.model_trainer;
  model_cfg.seed = stage_seed(seed, "model-train");
  TrainResult model = sgd_train(
      FeedForwardNet::init(widths, stage_seed(seed, "model-init")), model_examples,
      model_cfg);

  const DataPoint zero_baseline(std::vector<double>(static_cast<std::size_t>(cfg.d), 0.0));

  // Contrastive density, scaled to [0, 1] over manifold + splices.
  stage = "density";
  OodClassifier ood = nce_train(train, NoiseSpec{zero_baseline, cfg.noise_ratio},
                                cfg.ood_trainer, stage_seed(seed, "nce"), cfg.ood_hidden);
  DensityField p_raw = nce_density(ood);
  std::vector<DataPoint> pool = train_rows;
  {
    std::vector<DataPoint> splices = generate_noise(
        train, NoiseSpec{zero_baseline, 1.0}, train_n, stage_seed(seed, "scale-pool"));
    pool.insert(pool.end(), splices.begin(), splices.end());
  }
  DensityField p_scaled = scale_to_unit(p_raw, pool);

  const bool wants_surrogate =
      std::find(cfg.value_functions.begin(), cfg.value_functions.end(),
                "ces_supervised") != cfg.value_functions.end();

  AttackReport report;
  report.protected_index = cfg.protected_index;

  // Surrogate for the conditional-expectation readout.
  stage = "surrogate";
  SurrogateValueFunction surrogate_before;
  SurrogateValueFunction surrogate_after;
  std::vector<TrainExample> surrogate_eval;
  if (wants_surrogate) {
    ScalarField f_field = net_field(model.net);
    surrogate_before = fit_ces_surrogate_net(f_field, train, cfg.surrogate_trainer,
                                             cfg.surrogate_hidden, 8,
                                             stage_seed(seed, "surrogate"));
    // Held-out masked MSE, reused for the attacked surrogate below.
    Rng mask_rng(stage_seed(seed, "surrogate-eval"));
    for (const DataPoint& row : held_rows) {
      Coalition s = sample_shapley_coalition(cfg.d, mask_rng);
      surrogate_eval.push_back(
          {SurrogateValueFunction::encode(row, s), f_field(row), 1.0});
    }
  }

  // Fine-tuning attack on the model (and surrogate when present).
  stage = "finetune";
  FeedForwardNet attacked = model.net;
  if (cfg.attack_enabled) {
    FinetuneResult ft = finetune_attack(model.net, p_scaled, train, zero_baseline,
                                        cfg.protected_index, cfg.attack_trainer,
                                        cfg.low_density_threshold, cfg.loss_weights,
                                        cfg.kappa, stage_seed(seed, "attack"));
    attacked = std::move(ft.net);
    report.fidelity_loss = ft.fidelity_loss;
    report.attack_loss = ft.attack_loss;
  }
  if (wants_surrogate) {
    // The surrogate is attacked on its own evaluation surface: proper mask
    // encodings whose decoded splice point is low-density.
    if (cfg.attack_enabled) {
      const FeedForwardNet& g_net = *surrogate_before.net();
      std::vector<TrainExample> g_examples;
      Rng mask_rng(stage_seed(seed, "surrogate-attack-masks"));
      for (std::size_t r = 0; r < 4 * train_n; ++r) {
        const DataPoint& row = train.row(r % train_n);
        Coalition s = sample_shapley_coalition(cfg.d, mask_rng);
        std::vector<double> enc = SurrogateValueFunction::encode(row, s);
        const DataPoint decoded = splice(row, zero_baseline, s);
        if (p_scaled(decoded) < cfg.low_density_threshold) {
          g_examples.push_back({std::move(enc),
                                -cfg.kappa * decoded[cfg.protected_index],
                                cfg.surrogate_loss_weights.second});
        } else {
          g_examples.push_back(
              {std::move(enc), g_net.forward(SurrogateValueFunction::encode(row, s)),
               cfg.surrogate_loss_weights.first});
        }
      }
      TrainerConfig g_cfg = cfg.attack_trainer;
      g_cfg.loss = LossKind::mse;
      g_cfg.seed = stage_seed(seed, "surrogate-attack");
      TrainResult gt = sgd_train(g_net, g_examples, g_cfg);
      surrogate_after = surrogate_from_net(std::move(gt.net));
    } else {
      surrogate_after = surrogate_before;
    }
    report.surrogate_mse_before =
        evaluate_loss(*surrogate_before.net(), surrogate_eval, LossKind::mse);
    report.surrogate_mse_after =
        evaluate_loss(*surrogate_after.net(), surrogate_eval, LossKind::mse);
  }

  ScalarField f_before = net_field(model.net);
  ScalarField f_after = net_field(attacked);

  // On-manifold agreement on held-out points.
  stage = "evaluation";
  report.agreement_rate = sign_agreement(f_before, f_after, held_rows);

  std::vector<DataPoint> explicands;
  for (const DataPoint& row : held_rows) {
    if (row[cfg.protected_index] > 0.0) explicands.push_back(row);
    if (static_cast<int>(explicands.size()) >= cfg.explicands) break;
  }
  if (explicands.empty()) throw InvalidInputError("no explicands with the protected feature active");
  report.explicands = static_cast<int>(explicands.size());

  // Shared baseline distribution for the randomized variants.
  BaselineDistribution base_dist;
  {
    Rng rng(stage_seed(seed, "baseline-draws"));
    for (int k = 0; k < cfg.baseline_samples; ++k) {
      base_dist.points.push_back(
          train.row(static_cast<std::size_t>(rng.below(train_n))));
      base_dist.weights.push_back(1.0 / cfg.baseline_samples);
    }
  }

  // Global Shapley per value function, before vs after.
  stage = "attribution";
  const auto global_for = [&](const std::string& vf, const ScalarField& f,
                              const SurrogateValueFunction& g) {
    std::vector<AttributionVector> attrs;
    attrs.reserve(explicands.size());
    for (const DataPoint& x : explicands) {
      ValueFunction v;
      if (vf == "bshap") {
        v = bshap(GameContext(f, std::nullopt, x, zero_baseline));
      } else if (vf == "jbshap") {
        v = jbshap(GameContext(f, p_scaled, x, zero_baseline));
      } else if (vf == "rbshap") {
        v = rbshap(GameContext(f, std::nullopt, x, base_dist), cfg.baseline_samples,
                   stage_seed(seed, "rbshap"));
      } else if (vf == "rjbshap") {
        v = rjbshap(GameContext(f, p_scaled, x, base_dist), cfg.baseline_samples,
                    stage_seed(seed, "rjbshap"));
      } else if (vf == "ces_supervised") {
        v = ces_supervised(g, GameContext(f, std::nullopt, x, zero_baseline));
      } else if (vf == "ces_empirical") {
        v = ces_empirical(GameContext(f, std::nullopt, x, zero_baseline), train);
      } else {
        throw ConfigError("unknown value function: " + vf);
      }
      attrs.push_back(exact_shapley(v, cfg.d));
    }
    return global_shapley(attrs, /*normalize=*/true);
  };

  for (const std::string& vf : cfg.value_functions) {
    AttackReport::Entry entry;
    entry.value_function = vf;
    entry.before = global_for(vf, f_before, surrogate_before).values;
    entry.after = global_for(vf, f_after, surrogate_after).values;
    entry.protected_before = entry.before[static_cast<std::size_t>(cfg.protected_index)];
    entry.protected_after = entry.after[static_cast<std::size_t>(cfg.protected_index)];
    const double denom = std::fabs(entry.protected_before);
    entry.drop_ratio = denom > 0.0
                           ? (entry.protected_before - entry.protected_after) / denom
                           : 0.0;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace

AttackReport hiding_unfairness_experiment(const HidingUnfairnessConfig& cfg) {
  // Sub-step failures surface with the stage that raised them.
  const char* stage = "setup";
  try {
    return run_hiding_unfairness(cfg, stage);
  } catch (const Error& e) {
    throw Error(std::string("stage ") + stage + ": " + e.what());
  }
}

}  // namespace jshap
