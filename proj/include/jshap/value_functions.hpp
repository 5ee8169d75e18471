#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jshap/core.hpp"
#include "jshap/learners.hpp"

namespace jshap {

/// A set value function v(S) bound to a game context. Evaluation is pure;
/// seeded estimators derive their stream from (seed, S) so repeated and
/// concurrent evaluation of the same coalition agree.
class ValueFunction {
 public:
  using Eval = std::function<double(const Coalition&)>;

  ValueFunction() = default;
  ValueFunction(std::string kind, int dim, Eval eval)
      : kind_(std::move(kind)), dim_(dim), eval_(std::move(eval)) {}

  double operator()(const Coalition& s) const { return eval_(s); }
  const std::string& kind() const { return kind_; }
  int dim() const { return dim_; }

 private:
  std::string kind_;
  int dim_ = 0;
  Eval eval_;
};

/// v(S) = f(splice(x, x', S)) with the fixed baseline.
ValueFunction bshap(const GameContext& ctx);

/// Baseline-averaged Bshap. Finite baseline lists of size <= n are enumerated
/// exactly; larger lists are sampled n times from the weighted list.
ValueFunction rbshap(const GameContext& ctx, int n, std::uint64_t seed);

/// v(S) = f(splice) * p(splice), the joint-baseline value.
ValueFunction jbshap(const GameContext& ctx);

/// Baseline-averaged JBshap. When the baseline distribution declares a
/// uniform density C0, distinct free-coordinate patterns are enumerated with
/// weight C0 (an unnormalized integral); otherwise the weighted list is
/// averaged like rbshap.
ValueFunction rjbshap(const GameContext& ctx, int n, std::uint64_t seed);

struct CesEmpiricalValue {
  double value = 0.0;
  /// True when no dataset row matched x_S and the unconditional mean was used.
  bool sparse_fallback = false;
};

/// Mean model output over rows that match the explicand exactly on S.
CesEmpiricalValue ces_empirical_value(const GameContext& ctx, const Dataset& data,
                                      const Coalition& s);

ValueFunction ces_empirical(const GameContext& ctx, Dataset data);

/// Where the free coordinates of a conditional-expectation sample live:
/// either a finite grid, enumerated in full, or a box sampled uniformly.
struct SupportSpec {
  static SupportSpec grid(GridSupport g);
  static SupportSpec box(std::vector<std::pair<double, double>> bounds, int samples);

  std::optional<GridSupport> grid_support;
  std::vector<std::pair<double, double>> box_bounds;
  int box_samples = 0;
};

/// Self-normalized importance estimate of the conditional expectation:
/// sum_k f(splice_k) p(splice_k) / sum_k p(splice_k) with splice_k varying
/// only off-coalition coordinates over the declared support.
ValueFunction ces_sample(const GameContext& ctx, SupportSpec support, std::uint64_t seed);

/// Masked surrogate g(x_S). Two backends share the contract:
///  - table: the exact minimizer of the masked squared loss, one cell per
///    realized (x_S, S), falling back to the dataset mean on unseen cells;
///  - net: a feed-forward net on [masked values ++ mask bits] trained by SGD.
class SurrogateValueFunction {
 public:
  double value(const DataPoint& x, const Coalition& s) const;
  int dim() const { return dim_; }
  const std::string& backend() const { return backend_; }
  /// Present only for the net backend.
  const std::optional<FeedForwardNet>& net() const { return net_; }

  /// Net-backend input encoding: masked-to-zero values then a d-bit mask.
  static std::vector<double> encode(const DataPoint& x, const Coalition& s);

  std::string to_json_string() const;
  static SurrogateValueFunction from_json_string(const std::string& text);

  friend SurrogateValueFunction fit_ces_surrogate_table(const ScalarField& f,
                                                        const Dataset& data);
  friend SurrogateValueFunction fit_ces_surrogate_net(const ScalarField& f,
                                                      const Dataset& data,
                                                      const TrainerConfig& trainer,
                                                      const std::vector<int>& hidden,
                                                      std::size_t samples_per_row,
                                                      std::uint64_t seed);
  friend SurrogateValueFunction surrogate_from_net(FeedForwardNet net);

 private:
  std::string backend_;
  int dim_ = 0;
  // table backend
  std::map<std::pair<std::uint64_t, std::vector<double>>, double> cells_;
  double fallback_mean_ = 0.0;
  // net backend
  std::optional<FeedForwardNet> net_;
};

/// Exact ERM over the table class; cells are per-(x_S, S) means of f over
/// matching rows, which is the global minimizer of the masked squared loss.
SurrogateValueFunction fit_ces_surrogate_table(const ScalarField& f, const Dataset& data);

/// SGD on sampled (row, S) pairs with S drawn by the Shapley coalition law
/// (uniform permutation, uniform cut, take the prefix).
SurrogateValueFunction fit_ces_surrogate_net(const ScalarField& f, const Dataset& data,
                                             const TrainerConfig& trainer,
                                             const std::vector<int>& hidden,
                                             std::size_t samples_per_row,
                                             std::uint64_t seed);

/// Wraps an already-trained masked net (used by the attack harness).
SurrogateValueFunction surrogate_from_net(FeedForwardNet net);

/// v(S) = g(x_S) on the context's explicand.
ValueFunction ces_supervised(const SurrogateValueFunction& surrogate,
                             const GameContext& ctx);

/// Direct table over all 2^d coalitions, indexed by bitmask.
ValueFunction table_game(int d, std::vector<double> values_by_mask,
                         std::string kind = "table");

/// Draws a coalition by the Shapley law: uniform permutation prefix with a
/// uniform cut point in [0, d].
Coalition sample_shapley_coalition(int d, Rng& rng);

}  // namespace jshap
