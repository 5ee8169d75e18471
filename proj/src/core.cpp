#include "jshap/core.hpp"

#include <algorithm>
#include <cmath>

namespace jshap {

namespace {

constexpr double kGridLookupTol = 1e-9;

}  // namespace

DataPoint::DataPoint(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw InvalidInputError("DataPoint entries must be finite");
    }
  }
}

Coalition::Coalition(std::vector<int> members, int dim)
    : members_(std::move(members)), dim_(dim) {
  if (dim_ < 0) throw InvalidInputError("coalition dimension must be nonnegative");
  std::sort(members_.begin(), members_.end());
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i] < 0 || members_[i] >= dim_) {
      throw InvalidInputError("coalition member out of range");
    }
    if (i > 0 && members_[i] == members_[i - 1]) {
      throw InvalidInputError("duplicate coalition member");
    }
  }
}

Coalition Coalition::full(int dim) {
  std::vector<int> all(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) all[static_cast<std::size_t>(i)] = i;
  return Coalition(std::move(all), dim);
}

Coalition Coalition::from_mask(std::uint64_t mask, int dim) {
  std::vector<int> members;
  for (int i = 0; i < dim; ++i) {
    if (mask & (1ULL << i)) members.push_back(i);
  }
  return Coalition(std::move(members), dim);
}

bool Coalition::contains(int i) const {
  return std::binary_search(members_.begin(), members_.end(), i);
}

std::uint64_t Coalition::mask() const {
  if (dim_ > 64) throw CapacityError("bitmask view limited to d <= 64");
  std::uint64_t m = 0;
  for (int i : members_) m |= (1ULL << i);
  return m;
}

Coalition Coalition::complement() const {
  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(dim_ - size()));
  std::size_t k = 0;
  for (int i = 0; i < dim_; ++i) {
    if (k < members_.size() && members_[k] == i) {
      ++k;
    } else {
      rest.push_back(i);
    }
  }
  return Coalition(std::move(rest), dim_);
}

Coalition Coalition::with(int i) const {
  if (contains(i)) return *this;
  std::vector<int> members = members_;
  members.push_back(i);
  return Coalition(std::move(members), dim_);
}

Dataset::Dataset(std::vector<DataPoint> rows, std::vector<std::string> feature_names)
    : rows_(std::move(rows)), feature_names_(std::move(feature_names)) {
  for (const DataPoint& r : rows_) {
    if (r.dim() != rows_.front().dim()) {
      throw InvalidInputError("dataset rows must share one dimension");
    }
  }
  if (!feature_names_.empty() && !rows_.empty() &&
      static_cast<int>(feature_names_.size()) != rows_.front().dim()) {
    throw InvalidInputError("feature name count must match row dimension");
  }
}

int Dataset::dim() const {
  if (rows_.empty()) {
    return feature_names_.empty() ? 0 : static_cast<int>(feature_names_.size());
  }
  return rows_.front().dim();
}

GridSupport::GridSupport(std::vector<std::vector<double>> per_coordinate)
    : values_(std::move(per_coordinate)) {
  for (const auto& coord : values_) {
    if (coord.empty()) throw InvalidInputError("empty coordinate support");
  }
}

std::size_t GridSupport::size() const {
  std::size_t n = 1;
  for (const auto& coord : values_) n *= coord.size();
  return n;
}

std::optional<std::size_t> GridSupport::try_index_of(const DataPoint& x) const {
  if (x.dim() != dim()) throw InvalidInputError("grid lookup dimension mismatch");
  std::size_t flat = 0;
  for (int i = 0; i < dim(); ++i) {
    const auto& coord = values_[static_cast<std::size_t>(i)];
    std::size_t found = coord.size();
    for (std::size_t k = 0; k < coord.size(); ++k) {
      if (std::fabs(coord[k] - x[i]) <= kGridLookupTol) {
        found = k;
        break;
      }
    }
    if (found == coord.size()) return std::nullopt;
    flat = flat * coord.size() + found;
  }
  return flat;
}

std::size_t GridSupport::index_of(const DataPoint& x) const {
  auto idx = try_index_of(x);
  if (!idx) throw InvalidInputError("point is off the grid support");
  return *idx;
}

DataPoint GridSupport::point(std::size_t flat_index) const {
  std::vector<double> coords(static_cast<std::size_t>(dim()));
  for (int i = dim() - 1; i >= 0; --i) {
    const auto& coord = values_[static_cast<std::size_t>(i)];
    coords[static_cast<std::size_t>(i)] = coord[flat_index % coord.size()];
    flat_index /= coord.size();
  }
  return DataPoint(std::move(coords));
}

ScalarField ScalarField::linear(std::vector<double> weights, double intercept) {
  ScalarField f;
  f.kind_ = "linear";
  f.eval_ = [weights = std::move(weights), intercept](const DataPoint& x) {
    if (x.dim() != static_cast<int>(weights.size())) {
      throw InvalidInputError("linear field dimension mismatch");
    }
    double acc = intercept;
    for (int i = 0; i < x.dim(); ++i) acc += weights[static_cast<std::size_t>(i)] * x[i];
    return acc;
  };
  return f;
}

ScalarField ScalarField::table(GridSupport support, std::vector<double> values) {
  if (values.size() != support.size()) {
    throw InvalidInputError("table size must match grid size");
  }
  ScalarField f;
  f.kind_ = "table";
  f.eval_ = [support = std::move(support), values = std::move(values)](const DataPoint& x) {
    return values[support.index_of(x)];
  };
  return f;
}

ScalarField ScalarField::constant(double value) {
  ScalarField f;
  f.kind_ = "constant";
  f.eval_ = [value](const DataPoint&) { return value; };
  return f;
}

ScalarField ScalarField::from_function(std::string kind,
                                       std::function<double(const DataPoint&)> fn) {
  ScalarField f;
  f.kind_ = std::move(kind);
  f.eval_ = std::move(fn);
  return f;
}

DensityField DensityField::table(GridSupport support, std::vector<double> values,
                                 bool normalized) {
  if (values.size() != support.size()) {
    throw InvalidInputError("table size must match grid size");
  }
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw InvalidInputError("density table entries must be nonnegative");
    }
  }
  DensityField p;
  p.kind_ = "table";
  p.normalized_ = normalized;
  p.eval_ = [support = std::move(support), values = std::move(values)](const DataPoint& x) {
    return values[support.index_of(x)];
  };
  return p;
}

DensityField DensityField::constant(double value) {
  if (value < 0.0) throw InvalidInputError("constant density must be nonnegative");
  DensityField p;
  p.kind_ = "constant";
  p.eval_ = [value](const DataPoint&) { return value; };
  return p;
}

DensityField DensityField::from_function(std::string kind,
                                         std::function<double(const DataPoint&)> fn,
                                         bool normalized) {
  DensityField p;
  p.kind_ = std::move(kind);
  p.normalized_ = normalized;
  p.eval_ = std::move(fn);
  return p;
}

double DensityField::operator()(const DataPoint& x) const {
  double v = eval_(x);
  if (v < 0.0 || !std::isfinite(v)) {
    throw InvalidInputError("density evaluated to a negative or non-finite value");
  }
  return v;
}

GameContext::GameContext(ScalarField f, std::optional<DensityField> p, DataPoint x,
                         BaselineSpec baseline)
    : f_(std::move(f)), p_(std::move(p)), x_(std::move(x)), baseline_(std::move(baseline)) {
  if (const auto* fixed = std::get_if<DataPoint>(&baseline_)) {
    if (fixed->dim() != x_.dim()) {
      throw InvalidInputError("baseline dimension must match explicand");
    }
  } else {
    const auto& dist = std::get<BaselineDistribution>(baseline_);
    if (dist.points.empty()) {
      throw InvalidInputError("baseline distribution must be nonempty");
    }
    if (dist.points.size() != dist.weights.size()) {
      throw InvalidInputError("baseline weights must match points");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < dist.points.size(); ++k) {
      if (dist.points[k].dim() != x_.dim()) {
        throw InvalidInputError("baseline point dimension must match explicand");
      }
      if (dist.weights[k] < 0.0) {
        throw InvalidInputError("baseline weights must be nonnegative");
      }
      total += dist.weights[k];
    }
    if (std::fabs(total - 1.0) > 1e-12) {
      throw InvalidInputError("baseline weights must sum to one");
    }
  }
}

const DensityField& GameContext::p() const {
  if (!p_) throw ConfigError("game context has no density");
  return *p_;
}

bool GameContext::has_fixed_baseline() const {
  return std::holds_alternative<DataPoint>(baseline_);
}

const DataPoint& GameContext::fixed_baseline() const {
  if (!has_fixed_baseline()) {
    throw ConfigError("game context has a baseline distribution, not a fixed baseline");
  }
  return std::get<DataPoint>(baseline_);
}

bool GameContext::has_baseline_distribution() const {
  return std::holds_alternative<BaselineDistribution>(baseline_);
}

const BaselineDistribution& GameContext::baseline_distribution() const {
  if (!has_baseline_distribution()) {
    throw ConfigError("game context has a fixed baseline, not a distribution");
  }
  return std::get<BaselineDistribution>(baseline_);
}

DataPoint splice(const DataPoint& x, const DataPoint& x_prime, const Coalition& s) {
  if (x.dim() != x_prime.dim() || s.dim() != x.dim()) {
    throw InvalidInputError("splice requires matching dimensions");
  }
  std::vector<double> out = x_prime.values();
  for (int i : s.members()) out[static_cast<std::size_t>(i)] = x[i];
  return DataPoint(std::move(out));
}

std::vector<Coalition> enumerate_coalitions(int d) {
  if (d < 0) throw InvalidInputError("dimension must be nonnegative");
  if (d > 25) throw CapacityError("coalition enumeration limited to d <= 25");
  std::vector<Coalition> out;
  out.reserve(static_cast<std::size_t>(1) << d);
  for (int size = 0; size <= d; ++size) {
    // Lexicographic combinations of the given size.
    std::vector<int> combo(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) combo[static_cast<std::size_t>(i)] = i;
    while (true) {
      out.emplace_back(combo, d);
      if (size == 0) break;
      int k = size - 1;
      while (k >= 0 && combo[static_cast<std::size_t>(k)] == d - size + k) --k;
      if (k < 0) break;
      ++combo[static_cast<std::size_t>(k)];
      for (int j = k + 1; j < size; ++j) {
        combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return out;
}

}  // namespace jshap
