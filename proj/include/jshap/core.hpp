#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "jshap/errors.hpp"

namespace jshap {

/// A real-valued feature vector. Entries must be finite; NaN and infinity are
/// rejected at construction so that every downstream evaluation contract can
/// assume clean inputs.
class DataPoint {
 public:
  DataPoint() = default;
  explicit DataPoint(std::vector<double> values);

  int dim() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const DataPoint& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
};

/// A subset of feature indices in [0, d). Members are kept sorted; a bitmask
/// view is available for d <= 64 and is the fast path everywhere internally.
class Coalition {
 public:
  Coalition(std::vector<int> members, int dim);

  static Coalition empty(int dim) { return Coalition({}, dim); }
  static Coalition full(int dim);
  static Coalition from_mask(std::uint64_t mask, int dim);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<int>& members() const { return members_; }
  bool contains(int i) const;
  std::uint64_t mask() const;

  Coalition complement() const;
  Coalition with(int i) const;

  bool operator==(const Coalition& other) const {
    return dim_ == other.dim_ && members_ == other.members_;
  }

 private:
  std::vector<int> members_;
  int dim_ = 0;
};

/// Rows of equal dimension, optionally named. Used both as training data and
/// as an empirical distribution.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<DataPoint> rows,
                   std::vector<std::string> feature_names = {});

  int dim() const;
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const DataPoint& row(std::size_t i) const { return rows_[i]; }
  const std::vector<DataPoint>& rows() const { return rows_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

 private:
  std::vector<DataPoint> rows_;
  std::vector<std::string> feature_names_;
};

/// Finite per-coordinate support values describing a product grid. Axiom
/// instances, table-backed fields and discrete samplers all enumerate it.
class GridSupport {
 public:
  GridSupport() = default;
  explicit GridSupport(std::vector<std::vector<double>> per_coordinate);

  int dim() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& coordinate(int i) const {
    return values_[static_cast<std::size_t>(i)];
  }
  std::size_t size() const;  // product of coordinate support sizes

  /// Flat row-major index of a grid point; throws InvalidInputError when a
  /// coordinate is off-support (tolerance 1e-9).
  std::size_t index_of(const DataPoint& x) const;
  std::optional<std::size_t> try_index_of(const DataPoint& x) const;
  DataPoint point(std::size_t flat_index) const;

 private:
  std::vector<std::vector<double>> values_;
};

/// A deterministic, side-effect-free scalar function of a data point. The
/// kind tag records how the field was built (linear | table | feedforward |
/// composed | perturbed).
class ScalarField {
 public:
  ScalarField() = default;

  static ScalarField linear(std::vector<double> weights, double intercept);
  static ScalarField table(GridSupport support, std::vector<double> values);
  static ScalarField constant(double value);
  static ScalarField from_function(std::string kind,
                                   std::function<double(const DataPoint&)> fn);

  double operator()(const DataPoint& x) const { return eval_(x); }
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
  std::function<double(const DataPoint&)> eval_;
};

/// A possibly-unnormalized density: nonnegative everywhere. Evaluations are
/// checked; a negative or non-finite value trips an InvalidInputError.
class DensityField {
 public:
  DensityField() = default;

  static DensityField table(GridSupport support, std::vector<double> values,
                            bool normalized = false);
  static DensityField constant(double value);
  static DensityField from_function(std::string kind,
                                    std::function<double(const DataPoint&)> fn,
                                    bool normalized = false);

  double operator()(const DataPoint& x) const;
  const std::string& kind() const { return kind_; }
  bool normalized() const { return normalized_; }

 private:
  std::string kind_;
  std::function<double(const DataPoint&)> eval_;
  bool normalized_ = false;
};

/// A finite set of baseline points with weights summing to one. For the
/// uniform case, `uniform_density` holds the constant (unnormalized) baseline
/// density C0; randomized value functions then enumerate distinct
/// free-coordinate patterns weighted by C0 instead of averaging.
struct BaselineDistribution {
  std::vector<DataPoint> points;
  std::vector<double> weights;
  std::optional<double> uniform_density;
};

using BaselineSpec = std::variant<DataPoint, BaselineDistribution>;

/// Everything a value function needs: the model f, an optional density p, the
/// explicand x and the baseline specification. Immutable once built.
class GameContext {
 public:
  GameContext(ScalarField f, std::optional<DensityField> p, DataPoint x,
              BaselineSpec baseline);

  int dim() const { return x_.dim(); }
  const ScalarField& f() const { return f_; }
  bool has_density() const { return p_.has_value(); }
  const DensityField& p() const;
  const DataPoint& x() const { return x_; }

  bool has_fixed_baseline() const;
  const DataPoint& fixed_baseline() const;
  bool has_baseline_distribution() const;
  const BaselineDistribution& baseline_distribution() const;

 private:
  ScalarField f_;
  std::optional<DensityField> p_;
  DataPoint x_;
  BaselineSpec baseline_;
};

/// Composes (x_S; x'_{S_bar}): coalition coordinates from x, the rest from
/// x_prime.
DataPoint splice(const DataPoint& x, const DataPoint& x_prime, const Coalition& s);

/// All 2^d coalitions, ordered by size then lexicographically by members.
/// Guarded at d <= 25.
std::vector<Coalition> enumerate_coalitions(int d);

}  // namespace jshap
