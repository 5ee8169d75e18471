#include "jshap/axioms.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "jshap/shapley.hpp"

namespace jshap {

namespace {

nlohmann::json instance_json(const GameInstance& inst) {
  nlohmann::json j;
  nlohmann::json support = nlohmann::json::array();
  for (int i = 0; i < inst.support.dim(); ++i) support.push_back(inst.support.coordinate(i));
  j["support"] = std::move(support);
  j["f_values"] = inst.f_values;
  j["p_values"] = inst.p_values;
  j["x"] = inst.x.values();
  j["x_prime"] = inst.x_prime.values();
  return j;
}

// Tracks the worst violation and its witness across instances.
struct ViolationTracker {
  double max_violation = 0.0;
  std::optional<std::string> witness;

  void observe(double violation, double tol, const GameInstance& inst,
               const nlohmann::json& detail) {
    if (violation > max_violation) {
      max_violation = violation;
      if (violation > tol) {
        nlohmann::json w = instance_json(inst);
        w["detail"] = detail;
        w["violation"] = violation;
        witness = w.dump();
      }
    }
  }

  AxiomReport report(std::string axiom, int trials, double tol) const {
    AxiomReport r;
    r.axiom = std::move(axiom);
    r.trials = trials;
    r.max_violation = max_violation;
    r.tolerance = tol;
    r.pass = max_violation <= tol;
    if (!r.pass) r.witness = witness;
    return r;
  }
};

// Flat index with coordinates i and j swapped; valid when both coordinates
// share one support.
std::size_t swapped_index(const GridSupport& grid, std::size_t flat, int i, int j) {
  const int d = grid.dim();
  std::vector<std::size_t> digits(static_cast<std::size_t>(d));
  for (int k = d - 1; k >= 0; --k) {
    const std::size_t base = grid.coordinate(k).size();
    digits[static_cast<std::size_t>(k)] = flat % base;
    flat /= base;
  }
  std::swap(digits[static_cast<std::size_t>(i)], digits[static_cast<std::size_t>(j)]);
  std::size_t out = 0;
  for (int k = 0; k < d; ++k) {
    out = out * grid.coordinate(k).size() + digits[static_cast<std::size_t>(k)];
  }
  return out;
}

// Flat index with coordinate i forced to its first support value.
std::size_t collapsed_index(const GridSupport& grid, std::size_t flat, int i) {
  const int d = grid.dim();
  std::vector<std::size_t> digits(static_cast<std::size_t>(d));
  for (int k = d - 1; k >= 0; --k) {
    const std::size_t base = grid.coordinate(k).size();
    digits[static_cast<std::size_t>(k)] = flat % base;
    flat /= base;
  }
  digits[static_cast<std::size_t>(i)] = 0;
  std::size_t out = 0;
  for (int k = 0; k < d; ++k) {
    out = out * grid.coordinate(k).size() + digits[static_cast<std::size_t>(k)];
  }
  return out;
}

bool tables_symmetric(const GameInstance& inst, int i, int j) {
  if (inst.support.coordinate(i) != inst.support.coordinate(j)) return false;
  for (std::size_t k = 0; k < inst.f_values.size(); ++k) {
    const std::size_t sk = swapped_index(inst.support, k, i, j);
    if (inst.f_values[k] != inst.f_values[sk]) return false;
    if (inst.p_values[k] != inst.p_values[sk]) return false;
  }
  return inst.x[i] == inst.x[j] && inst.x_prime[i] == inst.x_prime[j];
}

}  // namespace

ScalarField GameInstance::f() const { return ScalarField::table(support, f_values); }

DensityField GameInstance::p() const { return DensityField::table(support, p_values); }

GameContext GameInstance::context() const {
  return GameContext(f(), p(), x, x_prime);
}

GameInstance GameInstance::with_f(std::vector<double> values) const {
  GameInstance copy = *this;
  copy.f_values = std::move(values);
  return copy;
}

GameInstance GameInstance::with_p(std::vector<double> values) const {
  GameInstance copy = *this;
  copy.p_values = std::move(values);
  return copy;
}

ValueFunctionBuilder jbshap_builder() {
  return [](const GameInstance& inst) { return jbshap(inst.context()); };
}

ValueFunctionBuilder bshap_builder() {
  return [](const GameInstance& inst) { return bshap(inst.context()); };
}

ValueFunctionBuilder ces_builder() {
  return [](const GameInstance& inst) {
    return ces_sample(inst.context(), SupportSpec::grid(inst.support), 0);
  };
}

GameInstanceGenerator::GameInstanceGenerator(int min_dim, int max_dim, int support_size,
                                             std::uint64_t seed)
    : min_dim_(min_dim), max_dim_(max_dim), support_size_(support_size), rng_(seed) {
  if (min_dim_ < 2 || max_dim_ < min_dim_) throw InvalidInputError("bad dimension range");
  if (support_size_ < 2) throw InvalidInputError("support size must be >= 2");
}

GameInstance GameInstanceGenerator::random_instance(int d) {
  std::vector<double> coord(static_cast<std::size_t>(support_size_));
  for (int k = 0; k < support_size_; ++k) coord[static_cast<std::size_t>(k)] = k;
  GridSupport support(std::vector<std::vector<double>>(static_cast<std::size_t>(d), coord));

  const std::size_t n = support.size();
  std::vector<double> f_values(n);
  std::vector<double> p_values(n);
  for (std::size_t k = 0; k < n; ++k) {
    f_values[k] = rng_.uniform(-1.0, 1.0);
    // Strictly positive so conditional slices never empty out.
    p_values[k] = rng_.uniform(0.05, 1.0);
  }

  const auto random_point = [&]() {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      v[static_cast<std::size_t>(i)] =
          coord[static_cast<std::size_t>(rng_.below(static_cast<std::uint64_t>(support_size_)))];
    }
    return DataPoint(std::move(v));
  };

  GameInstance inst;
  inst.support = std::move(support);
  inst.f_values = std::move(f_values);
  inst.p_values = std::move(p_values);
  inst.x = random_point();
  inst.x_prime = random_point();
  return inst;
}

GameInstance GameInstanceGenerator::next() {
  const int d = min_dim_ + static_cast<int>(rng_.below(
                               static_cast<std::uint64_t>(max_dim_ - min_dim_ + 1)));
  return random_instance(d);
}

GameInstance GameInstanceGenerator::next_with_dummy(int& coord) {
  GameInstance inst = next();
  const int d = inst.support.dim();
  coord = static_cast<int>(rng_.below(static_cast<std::uint64_t>(d)));
  for (std::size_t k = 0; k < inst.f_values.size(); ++k) {
    const std::size_t ck = collapsed_index(inst.support, k, coord);
    inst.f_values[k] = inst.f_values[ck];
    inst.p_values[k] = inst.p_values[ck];
  }
  return inst;
}

GameInstance GameInstanceGenerator::next_with_function_only_dummy(int& coord) {
  GameInstance inst = next();
  const int d = inst.support.dim();
  coord = static_cast<int>(rng_.below(static_cast<std::uint64_t>(d)));
  for (std::size_t k = 0; k < inst.f_values.size(); ++k) {
    inst.f_values[k] = inst.f_values[collapsed_index(inst.support, k, coord)];
  }
  // p keeps its generic dependence on `coord`, coupling it to the rest.
  return inst;
}

GameInstance GameInstanceGenerator::next_symmetric(int& i, int& j) {
  GameInstance inst = next();
  const int d = inst.support.dim();
  i = static_cast<int>(rng_.below(static_cast<std::uint64_t>(d)));
  j = static_cast<int>(rng_.below(static_cast<std::uint64_t>(d - 1)));
  if (j >= i) ++j;
  if (i > j) std::swap(i, j);
  for (std::size_t k = 0; k < inst.f_values.size(); ++k) {
    const std::size_t sk = swapped_index(inst.support, k, i, j);
    if (sk > k) {
      inst.f_values[sk] = inst.f_values[k];
      inst.p_values[sk] = inst.p_values[k];
    }
  }
  std::vector<double> x = inst.x.values();
  std::vector<double> xp = inst.x_prime.values();
  x[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(i)];
  xp[static_cast<std::size_t>(j)] = xp[static_cast<std::size_t>(i)];
  inst.x = DataPoint(std::move(x));
  inst.x_prime = DataPoint(std::move(xp));
  return inst;
}

std::string AxiomReport::to_json_string() const {
  nlohmann::json j;
  j["axiom"] = axiom;
  j["trials"] = trials;
  j["max_violation"] = max_violation;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  if (witness) j["witness"] = nlohmann::json::parse(*witness);
  return j.dump(2);
}

AxiomReport check_linearity(const ValueFunctionBuilder& builder,
                            GameInstanceGenerator& gen, int trials, double tol) {
  ViolationTracker tracker;
  Rng rng(hash_name("linearity-coefficients"));
  for (int t = 0; t < trials; ++t) {
    GameInstance inst = gen.next();
    const std::size_t n = inst.f_values.size();

    // Function linearity with arbitrary real coefficients.
    std::vector<double> f2(n);
    for (double& v : f2) v = rng.uniform(-1.0, 1.0);
    const double a1 = rng.uniform(-2.0, 2.0);
    const double a2 = rng.uniform(-2.0, 2.0);
    std::vector<double> f_mix(n);
    for (std::size_t k = 0; k < n; ++k) f_mix[k] = a1 * inst.f_values[k] + a2 * f2[k];
    ValueFunction v1 = builder(inst);
    ValueFunction v2 = builder(inst.with_f(f2));
    ValueFunction v12 = builder(inst.with_f(f_mix));

    // Distribution linearity restricted to conic combinations.
    std::vector<double> p2(n);
    for (double& v : p2) v = rng.uniform(0.05, 1.0);
    const double b1 = rng.uniform(0.0, 2.0);
    const double b2 = rng.uniform(0.0, 2.0);
    std::vector<double> p_mix(n);
    for (std::size_t k = 0; k < n; ++k) p_mix[k] = b1 * inst.p_values[k] + b2 * p2[k];
    ValueFunction w1 = builder(inst);
    ValueFunction w2 = builder(inst.with_p(p2));
    ValueFunction w12 = builder(inst.with_p(p_mix));

    for (const Coalition& s : enumerate_coalitions(inst.support.dim())) {
      const double func_gap = std::fabs(a1 * v1(s) + a2 * v2(s) - v12(s));
      tracker.observe(func_gap, tol, inst,
                      {{"part", "function"}, {"mask", s.mask()}, {"a1", a1}, {"a2", a2}});
      const double dist_gap = std::fabs(b1 * w1(s) + b2 * w2(s) - w12(s));
      tracker.observe(dist_gap, tol, inst,
                      {{"part", "distribution"}, {"mask", s.mask()}, {"b1", b1}, {"b2", b2}});
    }
  }
  return tracker.report("linearity", trials, tol);
}

std::optional<double> symmetry_violation(const ValueFunctionBuilder& builder,
                                         const GameInstance& inst, int i, int j) {
  if (!tables_symmetric(inst, i, j)) return std::nullopt;
  ValueFunction v = builder(inst);
  double worst = 0.0;
  for (const Coalition& s : enumerate_coalitions(inst.support.dim())) {
    if (s.contains(i) || s.contains(j)) continue;
    worst = std::max(worst, std::fabs(v(s.with(i)) - v(s.with(j))));
  }
  return worst;
}

AxiomReport check_symmetry(const ValueFunctionBuilder& builder,
                           GameInstanceGenerator& gen, int trials, double tol) {
  ViolationTracker tracker;
  int used = 0;
  for (int t = 0; t < trials; ++t) {
    int i = 0;
    int j = 0;
    GameInstance inst = gen.next_symmetric(i, j);
    const auto worst = symmetry_violation(builder, inst, i, j);
    if (!worst) continue;  // precondition unmet: skip, not fail
    ++used;
    tracker.observe(*worst, tol, inst, {{"i", i}, {"j", j}});
  }
  return tracker.report("symmetry", used, tol);
}

namespace {

AxiomReport dummy_check_impl(const ValueFunctionBuilder& builder,
                             GameInstanceGenerator& gen, int trials, double tol,
                             bool both_invariant, const char* name) {
  ViolationTracker tracker;
  for (int t = 0; t < trials; ++t) {
    int coord = 0;
    GameInstance inst = both_invariant ? gen.next_with_dummy(coord)
                                       : gen.next_with_function_only_dummy(coord);
    ValueFunction v = builder(inst);
    for (const Coalition& s : enumerate_coalitions(inst.support.dim())) {
      if (s.contains(coord)) continue;
      const double gap = std::fabs(v(s.with(coord)) - v(s));
      tracker.observe(gap, tol, inst, {{"mask", s.mask()}, {"coord", coord}});
    }
  }
  return tracker.report(name, trials, tol);
}

}  // namespace

AxiomReport check_dummy(const ValueFunctionBuilder& builder, GameInstanceGenerator& gen,
                        int trials, double tol) {
  return dummy_check_impl(builder, gen, trials, tol, true, "dummy");
}

AxiomReport check_dummy_function_only(const ValueFunctionBuilder& builder,
                                      GameInstanceGenerator& gen, int trials, double tol) {
  return dummy_check_impl(builder, gen, trials, tol, false, "dummy_function_only");
}

AxiomReport check_null(const ValueFunctionBuilder& builder, GameInstanceGenerator& gen,
                       int trials, double tol) {
  ViolationTracker tracker;
  Rng rng(hash_name("null-pairs"));
  for (int t = 0; t < trials; ++t) {
    GameInstance inst = gen.next();
    const std::size_t n = inst.f_values.size();
    const std::size_t anchor = inst.support.index_of(inst.x_prime);
    std::vector<double> f2(n);
    std::vector<double> p2(n);
    for (std::size_t k = 0; k < n; ++k) {
      f2[k] = rng.uniform(-1.0, 1.0);
      p2[k] = rng.uniform(0.05, 1.0);
    }
    // Agreement at the baseline only.
    f2[anchor] = inst.f_values[anchor];
    p2[anchor] = inst.p_values[anchor];
    ValueFunction v1 = builder(inst);
    ValueFunction v2 = builder(inst.with_f(std::move(f2)).with_p(std::move(p2)));
    const Coalition empty = Coalition::empty(inst.support.dim());
    const double gap = std::fabs(v1(empty) - v2(empty));
    tracker.observe(gap, tol, inst, {{"part", "null"}});
  }
  return tracker.report("null", trials, tol);
}

AxiomReport check_efficiency(const ValueFunctionBuilder& builder,
                             GameInstanceGenerator& gen, int trials, double tol) {
  ViolationTracker tracker;
  for (int t = 0; t < trials; ++t) {
    GameInstance inst = gen.next();
    ValueFunction v = builder(inst);
    const int d = inst.support.dim();
    const ScalarField f = inst.f();
    const DensityField p = inst.p();
    const double expected = f(inst.x) * p(inst.x) - f(inst.x_prime) * p(inst.x_prime);
    const double got = v(Coalition::full(d)) - v(Coalition::empty(d));
    tracker.observe(std::fabs(got - expected), tol, inst,
                    {{"expected", expected}, {"got", got}});
  }
  return tracker.report("efficiency", trials, tol);
}

AxiomReport check_set_relevance(const ValueFunctionBuilder& builder,
                                GameInstanceGenerator& gen, int trials, double tol) {
  ViolationTracker tracker;
  Rng rng(hash_name("set-relevance-pairs"));
  for (int t = 0; t < trials; ++t) {
    GameInstance inst = gen.next();
    const int d = inst.support.dim();
    const std::size_t n = inst.f_values.size();
    for (const Coalition& s : enumerate_coalitions(d)) {
      // Perturb f and p only where the S coordinates disagree with x_S.
      std::vector<double> f2 = inst.f_values;
      std::vector<double> p2 = inst.p_values;
      for (std::size_t k = 0; k < n; ++k) {
        const DataPoint pt = inst.support.point(k);
        bool agrees = true;
        for (int i : s.members()) {
          if (pt[i] != inst.x[i]) {
            agrees = false;
            break;
          }
        }
        if (!agrees) {
          f2[k] += rng.uniform(-1.0, 1.0);
          p2[k] = rng.uniform(0.05, 1.0);
        }
      }
      ValueFunction v1 = builder(inst);
      ValueFunction v2 = builder(inst.with_f(std::move(f2)).with_p(std::move(p2)));
      const double gap = std::fabs(v1(s) - v2(s));
      tracker.observe(gap, tol, inst, {{"mask", s.mask()}});
    }
  }
  return tracker.report("set_relevance", trials, tol);
}

AxiomReport check_strong_t_robustness(const ValueFunctionBuilder& builder,
                                      const GameInstance& base,
                                      const std::vector<double>& f2_values, double T,
                                      double tol) {
  if (f2_values.size() != base.f_values.size()) {
    throw InvalidInputError("perturbed table size mismatch");
  }
  double epsilon = 0.0;
  for (std::size_t k = 0; k < f2_values.size(); ++k) {
    epsilon = std::max(epsilon,
                       std::fabs(base.f_values[k] - f2_values[k]) * base.p_values[k]);
  }
  ValueFunction v1 = builder(base);
  ValueFunction v2 = builder(base.with_f(f2_values));
  ViolationTracker tracker;
  for (const Coalition& s : enumerate_coalitions(base.support.dim())) {
    const double delta = std::fabs(v1(s) - v2(s));
    const double excess = delta - T * epsilon;
    tracker.observe(excess, tol, base,
                    {{"mask", s.mask()}, {"delta", delta}, {"epsilon", epsilon}, {"T", T}});
  }
  AxiomReport r = tracker.report("strong_t_robustness", 1, tol);
  return r;
}

AxiomReport check_strong_t_robustness_random(const ValueFunctionBuilder& builder,
                                             GameInstanceGenerator& gen, int trials,
                                             double T, double tol) {
  ViolationTracker tracker;
  Rng rng(hash_name("robustness-perturbations"));
  for (int t = 0; t < trials; ++t) {
    GameInstance inst = gen.next();
    std::vector<double> f2 = inst.f_values;
    for (double& v : f2) v += rng.uniform(-1.0, 1.0);
    double epsilon = 0.0;
    for (std::size_t k = 0; k < f2.size(); ++k) {
      epsilon = std::max(epsilon, std::fabs(inst.f_values[k] - f2[k]) * inst.p_values[k]);
    }
    ValueFunction v1 = builder(inst);
    ValueFunction v2 = builder(inst.with_f(std::move(f2)));
    for (const Coalition& s : enumerate_coalitions(inst.support.dim())) {
      const double delta = std::fabs(v1(s) - v2(s));
      tracker.observe(delta - T * epsilon, tol, inst,
                      {{"mask", s.mask()}, {"delta", delta}, {"epsilon", epsilon}});
    }
  }
  return tracker.report("strong_t_robustness", trials, tol);
}

AxiomReport check_transfer(const ValueFunctionBuilder& builder,
                           GameInstanceGenerator& gen, int trials, double tol) {
  ViolationTracker tracker;
  Rng rng(hash_name("transfer-coefficients"));
  for (int t = 0; t < trials; ++t) {
    // Explanation-level efficiency and linearity on a generic instance.
    GameInstance inst = gen.next();
    const int d = inst.support.dim();
    AttributionVector phi = exact_shapley(builder(inst), d);

    const ScalarField f = inst.f();
    const DensityField p = inst.p();
    double phi_sum = 0.0;
    for (double v : phi.phi) phi_sum += v;
    const double expected =
        f(inst.x) * p(inst.x) - f(inst.x_prime) * p(inst.x_prime);
    tracker.observe(std::fabs(phi_sum - expected), tol, inst, {{"part", "efficiency"}});

    std::vector<double> f2(inst.f_values.size());
    for (double& v : f2) v = rng.uniform(-1.0, 1.0);
    std::vector<double> f_mix(inst.f_values.size());
    for (std::size_t k = 0; k < f_mix.size(); ++k) f_mix[k] = inst.f_values[k] + f2[k];
    AttributionVector phi2 = exact_shapley(builder(inst.with_f(f2)), d);
    AttributionVector phi_mix = exact_shapley(builder(inst.with_f(f_mix)), d);
    for (int i = 0; i < d; ++i) {
      const double gap = std::fabs(phi.phi[static_cast<std::size_t>(i)] +
                                   phi2.phi[static_cast<std::size_t>(i)] -
                                   phi_mix.phi[static_cast<std::size_t>(i)]);
      tracker.observe(gap, tol, inst, {{"part", "linearity_f"}, {"feature", i}});
    }

    std::vector<double> p2(inst.p_values.size());
    for (double& v : p2) v = rng.uniform(0.05, 1.0);
    std::vector<double> p_mix(inst.p_values.size());
    for (std::size_t k = 0; k < p_mix.size(); ++k) p_mix[k] = inst.p_values[k] + p2[k];
    AttributionVector psi2 = exact_shapley(builder(inst.with_p(p2)), d);
    AttributionVector psi_mix = exact_shapley(builder(inst.with_p(p_mix)), d);
    for (int i = 0; i < d; ++i) {
      const double gap = std::fabs(phi.phi[static_cast<std::size_t>(i)] +
                                   psi2.phi[static_cast<std::size_t>(i)] -
                                   psi_mix.phi[static_cast<std::size_t>(i)]);
      tracker.observe(gap, tol, inst, {{"part", "linearity_p"}, {"feature", i}});
    }

    // Symmetric pair gets equal attributions.
    int i = 0;
    int j = 0;
    GameInstance sym = gen.next_symmetric(i, j);
    AttributionVector sym_phi = exact_shapley(builder(sym), sym.support.dim());
    tracker.observe(std::fabs(sym_phi.phi[static_cast<std::size_t>(i)] -
                              sym_phi.phi[static_cast<std::size_t>(j)]),
                    tol, sym, {{"part", "symmetry"}, {"i", i}, {"j", j}});

    // Dummy coordinate gets zero.
    int coord = 0;
    GameInstance dum = gen.next_with_dummy(coord);
    AttributionVector dum_phi = exact_shapley(builder(dum), dum.support.dim());
    tracker.observe(std::fabs(dum_phi.phi[static_cast<std::size_t>(coord)]), tol, dum,
                    {{"part", "dummy"}, {"coord", coord}});
  }
  return tracker.report("transfer", trials, tol);
}

std::vector<AxiomReport> run_axiom_battery(const ValueFunctionBuilder& builder,
                                           int trials, double tol, std::uint64_t seed) {
  std::vector<AxiomReport> reports;
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("linearity")));
    reports.push_back(check_linearity(builder, gen, trials, tol));
  }
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("symmetry")));
    reports.push_back(check_symmetry(builder, gen, trials, tol));
  }
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("dummy")));
    reports.push_back(check_dummy(builder, gen, trials, tol));
  }
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("null")));
    reports.push_back(check_null(builder, gen, trials, tol));
  }
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("efficiency")));
    reports.push_back(check_efficiency(builder, gen, trials, tol));
  }
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("set_relevance")));
    reports.push_back(check_set_relevance(builder, gen, trials, tol));
  }
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("robustness")));
    reports.push_back(check_strong_t_robustness_random(builder, gen, trials, 1.0, tol));
  }
  {
    GameInstanceGenerator gen(2, 4, 2, mix_seed(seed, hash_name("transfer")));
    reports.push_back(check_transfer(builder, gen, trials, tol));
  }
  return reports;
}

}  // namespace jshap
