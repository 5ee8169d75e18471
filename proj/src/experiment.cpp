#include "jshap/experiment.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jshap/attack.hpp"
#include "jshap/axioms.hpp"
#include "jshap/density.hpp"
#include "jshap/io.hpp"
#include "jshap/metrics.hpp"
#include "jshap/shapley.hpp"
#include "jshap/value_functions.hpp"

namespace jshap {

namespace {

using nlohmann::json;

GridSupport parse_support(const json& j) {
  return GridSupport(j.get<std::vector<std::vector<double>>>());
}

DataPoint parse_point(const json& j) { return DataPoint(j.get<std::vector<double>>()); }

BaselineSpec parse_baseline(const json& j) {
  if (j.is_array()) return parse_point(j);
  BaselineDistribution dist;
  for (const auto& pt : j.at("points")) dist.points.push_back(parse_point(pt));
  dist.weights = j.at("weights").get<std::vector<double>>();
  if (j.contains("uniform_density")) {
    dist.uniform_density = j.at("uniform_density").get<double>();
  }
  return dist;
}

TrainerConfig parse_trainer(const json& j, TrainerConfig defaults) {
  TrainerConfig cfg = defaults;
  if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  return cfg;
}

ScalarField parse_model(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    return ScalarField::linear(j.at("weights").get<std::vector<double>>(),
                               j.value("intercept", 0.0));
  }
  if (kind == "table") {
    return ScalarField::table(parse_support(j.at("support")),
                              j.at("values").get<std::vector<double>>());
  }
  if (kind == "net") {
    return net_field(FeedForwardNet::from_json_string(read_text_file(j.at("path"))));
  }
  throw ConfigError("unknown model kind: " + kind);
}

DensityField parse_density(const json& j, const std::optional<Dataset>& data) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "empirical") {
    if (!data) throw ConfigError("empirical density needs a dataset");
    return empirical_density(*data);
  }
  if (kind == "smoothed") {
    if (!data) throw ConfigError("smoothed density needs a dataset");
    return smoothed_empirical(*data, j.at("sigma").get<double>());
  }
  if (kind == "table") {
    return DensityField::table(parse_support(j.at("support")),
                               j.at("values").get<std::vector<double>>());
  }
  if (kind == "categorical") {
    std::vector<CategoricalTable> tables;
    for (const auto& t : j.at("tables")) {
      tables.push_back({t.at("support").get<std::vector<double>>(),
                        t.at("probabilities").get<std::vector<double>>()});
    }
    return categorical_product(std::move(tables));
  }
  if (kind == "nce") {
    return nce_density(OodClassifier::from_json_string(read_text_file(j.at("path"))));
  }
  throw ConfigError("unknown density kind: " + kind);
}

struct ParsedGame {
  GameContext ctx;
  std::optional<GridSupport> support;
  std::optional<Dataset> data;
};

ParsedGame parse_game(const json& cfg) {
  std::optional<Dataset> data;
  if (cfg.contains("dataset")) data = load_dataset_csv(cfg.at("dataset"));

  if (cfg.contains("game")) {
    const json& g = cfg.at("game");
    GridSupport support = parse_support(g.at("support"));
    ScalarField f = ScalarField::table(support, g.at("values_f").get<std::vector<double>>());
    std::optional<DensityField> p;
    if (g.contains("values_p")) {
      p = DensityField::table(support, g.at("values_p").get<std::vector<double>>());
    }
    GameContext ctx(std::move(f), std::move(p), parse_point(g.at("x")),
                    parse_baseline(g.at("baseline")));
    return {std::move(ctx), std::move(support), std::move(data)};
  }

  ScalarField f = parse_model(cfg.at("model"));
  std::optional<DensityField> p;
  if (cfg.contains("density")) p = parse_density(cfg.at("density"), data);
  DataPoint x = cfg.at("explicand").is_array()
                    ? parse_point(cfg.at("explicand"))
                    : data->row(cfg.at("explicand").at("row").get<std::size_t>());
  GameContext ctx(std::move(f), std::move(p), std::move(x),
                  parse_baseline(cfg.at("baseline")));
  return {std::move(ctx), std::nullopt, std::move(data)};
}

ValueFunction build_value_function(const std::string& name, const ParsedGame& game,
                                   const json& cfg, std::uint64_t seed) {
  const GameContext& ctx = game.ctx;
  const int n = cfg.value("baseline_samples", 64);
  if (name == "bshap") return bshap(ctx);
  if (name == "jbshap") return jbshap(ctx);
  if (name == "rbshap") return rbshap(ctx, n, stage_seed(seed, "rbshap"));
  if (name == "rjbshap") return rjbshap(ctx, n, stage_seed(seed, "rjbshap"));
  if (name == "ces_empirical") {
    if (!game.data) throw ConfigError("ces_empirical needs a dataset");
    return ces_empirical(ctx, *game.data);
  }
  if (name == "ces_sample") {
    if (game.support) {
      return ces_sample(ctx, SupportSpec::grid(*game.support), stage_seed(seed, "ces"));
    }
    const json& box = cfg.at("ces_sample").at("box");
    std::vector<std::pair<double, double>> bounds;
    for (const auto& b : box) bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
    return ces_sample(ctx,
                      SupportSpec::box(std::move(bounds),
                                       cfg.at("ces_sample").value("samples", 64)),
                      stage_seed(seed, "ces"));
  }
  if (name == "ces_supervised") {
    SurrogateValueFunction g =
        SurrogateValueFunction::from_json_string(read_text_file(cfg.at("surrogate")));
    return ces_supervised(g, ctx);
  }
  throw ConfigError("unknown value function: " + name);
}

AttributionVector estimate(const ValueFunction& v, int d, const json& cfg,
                           std::uint64_t seed) {
  const json est = cfg.value("estimator", json{{"kind", "exact"}});
  const std::string kind = est.at("kind").get<std::string>();
  if (kind == "exact") return exact_shapley(v, d);
  if (kind == "permutation") {
    return permutation_shapley(v, d, est.at("permutations").get<int>(),
                               stage_seed(seed, "permutation"));
  }
  if (kind == "truncated") {
    return truncated_permutation_jbshap(v, d, est.at("permutations").get<int>(),
                                        est.at("frac").get<double>(),
                                        stage_seed(seed, "permutation"));
  }
  throw ConfigError("unknown estimator kind: " + kind);
}

int run_explain(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  ParsedGame game = parse_game(cfg);
  const int d = game.ctx.dim();
  std::vector<std::string> names =
      cfg.at("value_functions").get<std::vector<std::string>>();

  json report;
  report["dim"] = d;
  json items = json::array();
  std::cout << "value_function  phi\n";
  for (const std::string& name : names) {
    ValueFunction v = build_value_function(name, game, cfg, seed);
    AttributionVector attr = estimate(v, d, cfg, seed);
    json item = json::parse(attr.to_json_string());
    item["value_function"] = name;
    items.push_back(std::move(item));
    std::cout << name << "  [";
    for (int i = 0; i < d; ++i) std::cout << (i ? ", " : "") << attr.phi[static_cast<std::size_t>(i)];
    std::cout << "]\n";
  }
  report["attributions"] = std::move(items);
  write_text_file(out_dir + "/attributions.json", report.dump(2) + "\n");
  return 0;
}

int run_axioms(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  const std::string builder_name = cfg.value("builder", std::string("jbshap"));
  ValueFunctionBuilder builder;
  if (builder_name == "jbshap") {
    builder = jbshap_builder();
  } else if (builder_name == "bshap") {
    builder = bshap_builder();
  } else if (builder_name == "ces") {
    builder = ces_builder();
  } else {
    throw ConfigError("unknown builder: " + builder_name);
  }
  const int trials = cfg.value("trials", 200);
  const double tol = cfg.value("tolerance", 1e-9);

  std::vector<AxiomReport> reports =
      run_axiom_battery(builder, trials, tol, stage_seed(seed, "axioms"));
  json out = json::array();
  std::cout << "axiom  pass  max_violation\n";
  for (const AxiomReport& r : reports) {
    out.push_back(json::parse(r.to_json_string()));
    std::cout << r.axiom << "  " << (r.pass ? "pass" : "FAIL") << "  " << r.max_violation
              << "\n";
  }
  write_text_file(out_dir + "/axiom_reports.json", out.dump(2) + "\n");
  return 0;
}

int run_metrics(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  ParsedGame game = parse_game(cfg);
  const int d = game.ctx.dim();
  const std::string vf_name = cfg.value("value_function", std::string("bshap"));
  ValueFunction v = build_value_function(vf_name, game, cfg, seed);
  AttributionVector attr = estimate(v, d, cfg, seed);

  const std::vector<double> fractions =
      cfg.value("fractions", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  const CurveTarget target =
      cfg.value("target", std::string("f")) == "fp" ? CurveTarget::f_times_p : CurveTarget::f;
  DeletionCurve curve = deletion_curve(attr, game.ctx, fractions, target);
  AucResult area = auc(curve);

  json report;
  report["value_function"] = vf_name;
  report["phi"] = attr.phi;
  report["fractions"] = curve.fractions;
  report["curve"] = curve.values;
  report["auc"] = area.value;
  report["auc_normalized"] = area.normalized;
  if (cfg.contains("sensitivity")) {
    const json& s = cfg.at("sensitivity");
    report["sensitivity_n"] =
        sensitivity_n(attr, v, s.at("fracs").get<std::vector<double>>(),
                      s.value("trials", 100), stage_seed(seed, "sensitivity"));
  }
  write_text_file(out_dir + "/metrics.json", report.dump(2) + "\n");
  write_text_file(out_dir + "/deletion_curve.csv", curve.to_csv());
  std::cout << "auc " << area.value << (area.normalized ? "" : " (unnormalized)") << "\n";
  return 0;
}

int run_attack(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  HidingUnfairnessConfig hc;
  hc.n = cfg.value("n", hc.n);
  hc.d = cfg.value("d", hc.d);
  hc.protected_index = cfg.value("protected_index", hc.protected_index);
  hc.bias = cfg.value("bias", hc.bias);
  if (cfg.contains("value_functions")) {
    hc.value_functions = cfg.at("value_functions").get<std::vector<std::string>>();
  }
  hc.attack_enabled = cfg.value("attack_enabled", true);
  hc.low_density_threshold = cfg.value("low_density_threshold", hc.low_density_threshold);
  if (cfg.contains("loss_weights")) {
    hc.loss_weights = {cfg.at("loss_weights")[0].get<double>(),
                       cfg.at("loss_weights")[1].get<double>()};
  }
  hc.kappa = cfg.value("kappa", hc.kappa);
  hc.explicands = cfg.value("explicands", hc.explicands);
  if (cfg.contains("model_trainer")) {
    hc.model_trainer = parse_trainer(cfg.at("model_trainer"), hc.model_trainer);
  }
  if (cfg.contains("attack_trainer")) {
    hc.attack_trainer = parse_trainer(cfg.at("attack_trainer"), hc.attack_trainer);
  }
  hc.seed = stage_seed(seed, "attack-experiment");

  AttackReport report = hiding_unfairness_experiment(hc);
  write_text_file(out_dir + "/attack_report.json", report.to_json_string() + "\n");
  write_text_file(out_dir + "/attack_report.csv", report.to_csv());
  std::cout << "agreement " << report.agreement_rate << "\n";
  std::cout << "value_function  protected_before  protected_after  drop_ratio\n";
  for (const auto& e : report.entries) {
    std::cout << e.value_function << "  " << e.protected_before << "  "
              << e.protected_after << "  " << e.drop_ratio << "\n";
  }
  return 0;
}

int run_train_density(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  Dataset data = load_dataset_csv(cfg.at("dataset"));
  NoiseSpec noise{parse_baseline(cfg.at("baseline")), cfg.value("noise_ratio", 1.0)};
  TrainerConfig trainer =
      parse_trainer(cfg.value("trainer", json::object()), {0.05, 32, 60, 0, LossKind::bce});
  std::vector<int> hidden = cfg.value("hidden", std::vector<int>{16, 16});
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  if (cfg.contains("clip")) {
    clip_lo = cfg.at("clip")[0].get<double>();
    clip_hi = cfg.at("clip")[1].get<double>();
  }
  OodClassifier ood = nce_train(data, noise, trainer, stage_seed(seed, "nce"), hidden,
                                clip_lo, clip_hi);
  write_text_file(out_dir + "/ood_classifier.json", ood.to_json_string() + "\n");
  std::cout << "nce loss " << ood.initial_loss << " -> " << ood.final_loss << "\n";
  return 0;
}

int run_train_surrogate(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  Dataset data = load_dataset_csv(cfg.at("dataset"));
  ScalarField f = parse_model(cfg.at("model"));
  const std::string backend = cfg.value("backend", std::string("table"));
  SurrogateValueFunction g;
  if (backend == "table") {
    g = fit_ces_surrogate_table(f, data);
  } else if (backend == "net") {
    TrainerConfig trainer = parse_trainer(cfg.value("trainer", json::object()),
                                          {0.02, 32, 60, 0, LossKind::mse});
    g = fit_ces_surrogate_net(f, data, trainer,
                              cfg.value("hidden", std::vector<int>{32, 32}),
                              cfg.value("samples_per_row", std::size_t{8}),
                              stage_seed(seed, "surrogate"));
  } else {
    throw ConfigError("unknown surrogate backend: " + backend);
  }
  write_text_file(out_dir + "/surrogate.json", g.to_json_string() + "\n");
  std::cout << "surrogate backend " << g.backend() << "\n";
  return 0;
}

}  // namespace

int run_experiment(const std::string& subcommand, const std::string& config_path,
                   std::uint64_t seed, const std::string& out_dir) {
  std::string stage = "config";
  try {
    json cfg = json::parse(read_text_file(config_path));
    std::filesystem::create_directories(out_dir);
    stage = subcommand;
    if (subcommand == "explain") return run_explain(cfg, seed, out_dir);
    if (subcommand == "axioms") return run_axioms(cfg, seed, out_dir);
    if (subcommand == "metrics") return run_metrics(cfg, seed, out_dir);
    if (subcommand == "attack") return run_attack(cfg, seed, out_dir);
    if (subcommand == "train-density") return run_train_density(cfg, seed, out_dir);
    if (subcommand == "train-surrogate") return run_train_surrogate(cfg, seed, out_dir);
    stage = "config";
    throw ConfigError("unknown subcommand: " + subcommand);
  } catch (const ConfigError& e) {
    std::cerr << "stage " << stage << ": " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "stage " << stage << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "stage " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace jshap
