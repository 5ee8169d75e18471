#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "jshap/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Shapley attributions over joint-baseline value functions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;

  const auto add = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON config path")->required();
    sub->add_option("--seed", seed, "root seed, fanned out by stage");
    sub->add_option("--out", out_dir, "output directory");
    return sub;
  };

  add("explain", "compute attributions for the configured game");
  add("attack", "run the hiding-unfairness experiment");
  add("axioms", "run the axiom battery for a value-function builder");
  add("metrics", "deletion curve, AUC and sensitivity-n");
  add("train-density", "train the contrastive density classifier");
  add("train-surrogate", "fit the masked conditional-expectation surrogate");

  CLI11_PARSE(app, argc, argv);

  return jshap::run_experiment(app.get_subcommands().front()->get_name(), config_path,
                               seed, out_dir);
}
