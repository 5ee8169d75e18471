#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jshap/core.hpp"
#include "jshap/rng.hpp"
#include "jshap/value_functions.hpp"

namespace jshap {

/// One randomized discrete game: table-backed f and p over a product grid,
/// an explicand and a baseline, both grid points. Raw tables are kept so
/// checkers can build modified copies (perturbed f, mixed p, ...).
struct GameInstance {
  GridSupport support;
  std::vector<double> f_values;
  std::vector<double> p_values;
  DataPoint x;
  DataPoint x_prime;

  ScalarField f() const;
  DensityField p() const;
  GameContext context() const;
  GameInstance with_f(std::vector<double> values) const;
  GameInstance with_p(std::vector<double> values) const;
};

/// Builds a value function from an instance; the subject under test for every
/// axiom checker.
using ValueFunctionBuilder = std::function<ValueFunction(const GameInstance&)>;

ValueFunctionBuilder jbshap_builder();
ValueFunctionBuilder bshap_builder();
/// Exact conditional expectation: ces_sample enumerated over the instance
/// grid.
ValueFunctionBuilder ces_builder();

/// Randomized small discrete instances. Preconditions (a dummy coordinate, a
/// symmetric pair) are constructed, not detected.
class GameInstanceGenerator {
 public:
  GameInstanceGenerator(int min_dim, int max_dim, int support_size, std::uint64_t seed);

  GameInstance next();
  /// Neither f nor p reads `coord`.
  GameInstance next_with_dummy(int& coord);
  /// f ignores `coord` but p couples it to the other coordinates.
  GameInstance next_with_function_only_dummy(int& coord);
  /// f, p, x, x' all symmetric in coordinates i and j.
  GameInstance next_symmetric(int& i, int& j);

 private:
  GameInstance random_instance(int d);
  int min_dim_;
  int max_dim_;
  int support_size_;
  Rng rng_;
};

/// Outcome of one axiom battery run. `witness` holds a JSON description of
/// the first violating instance, sufficient to replay it standalone.
struct AxiomReport {
  std::string axiom;
  int trials = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::optional<std::string> witness;

  std::string to_json_string() const;
};

AxiomReport check_linearity(const ValueFunctionBuilder& builder,
                            GameInstanceGenerator& gen, int trials, double tol);

/// Max violation of v(S+i) = v(S+j) over admissible S, or nullopt when the
/// instance is not symmetric in (i, j); callers skip such instances rather
/// than failing them.
std::optional<double> symmetry_violation(const ValueFunctionBuilder& builder,
                                         const GameInstance& inst, int i, int j);

AxiomReport check_symmetry(const ValueFunctionBuilder& builder,
                           GameInstanceGenerator& gen, int trials, double tol);
AxiomReport check_dummy(const ValueFunctionBuilder& builder, GameInstanceGenerator& gen,
                        int trials, double tol);
/// Same assertion as check_dummy but the precondition only silences f; p
/// still reads the coordinate. Passes for value functions that never read p.
AxiomReport check_dummy_function_only(const ValueFunctionBuilder& builder,
                                      GameInstanceGenerator& gen, int trials, double tol);
AxiomReport check_null(const ValueFunctionBuilder& builder, GameInstanceGenerator& gen,
                       int trials, double tol);
AxiomReport check_efficiency(const ValueFunctionBuilder& builder,
                             GameInstanceGenerator& gen, int trials, double tol);
AxiomReport check_set_relevance(const ValueFunctionBuilder& builder,
                                GameInstanceGenerator& gen, int trials, double tol);

/// Compares max_S |v1(S) - v2(S)| against T * max_x |f1 - f2| * p, both exact
/// enumerations over the instance grid.
AxiomReport check_strong_t_robustness(const ValueFunctionBuilder& builder,
                                      const GameInstance& base,
                                      const std::vector<double>& f2_values, double T,
                                      double tol);

/// Randomized robustness battery: random pairs (f1, f2) on random instances.
AxiomReport check_strong_t_robustness_random(const ValueFunctionBuilder& builder,
                                             GameInstanceGenerator& gen, int trials,
                                             double T, double tol);

/// Verifies that exact Shapley on top of the builder carries the axioms to
/// the explanation: linearity over f and p, symmetry, dummy gives zero, and
/// efficiency sum(phi) = f(x)p(x) - f(x')p(x').
AxiomReport check_transfer(const ValueFunctionBuilder& builder,
                           GameInstanceGenerator& gen, int trials, double tol);

/// The full seven-axiom battery plus the transfer check.
std::vector<AxiomReport> run_axiom_battery(const ValueFunctionBuilder& builder,
                                           int trials, double tol, std::uint64_t seed);

}  // namespace jshap
