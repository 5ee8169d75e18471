#pragma once

#include <cstdint>
#include <string>

namespace jshap {

/// Runs one CLI subcommand (explain | attack | axioms | metrics |
/// train-density | train-surrogate) from a JSON config. All artifacts land in
/// `out_dir`; every random choice derives from `seed` fanned out by stage
/// name, so identical config + seed gives byte-identical outputs.
///
/// Returns the process exit status: 0 on success, 2 for an invalid config,
/// 1 for a runtime failure (message carries the failing stage).
int run_experiment(const std::string& subcommand, const std::string& config_path,
                   std::uint64_t seed, const std::string& out_dir);

}  // namespace jshap
