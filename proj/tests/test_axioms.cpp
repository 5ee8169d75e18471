#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "jshap/axioms.hpp"
#include "jshap/shapley.hpp"

using namespace jshap;

namespace {

// f1 = x0 on a grid whose second coordinate has a far-tail trigger value with
// tiny mass; f2 adds the indicator bump there. The classic low-density attack
// shape.
struct TailTriggerFixture {
  GameInstance base;
  std::vector<double> f2_values;

  TailTriggerFixture() {
    GridSupport support({{-1.0, 0.0, 1.0}, {0.0, 5.0}});
    std::vector<double> f_vals(support.size());
    std::vector<double> p_vals(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
      const DataPoint pt = support.point(k);
      f_vals[k] = pt[0];
      const double p0 = pt[0] == 0.0 ? 0.5 : 0.25;
      const double p1 = pt[1] == 0.0 ? 1.0 - 1e-6 : 1e-6;
      p_vals[k] = p0 * p1;
    }
    base.support = support;
    base.f_values = f_vals;
    base.p_values = p_vals;
    base.x = DataPoint({0.0, 5.0});
    base.x_prime = DataPoint({0.0, 0.0});

    f2_values = f_vals;
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (support.point(k)[1] == 5.0) f2_values[k] += 1.0;  // C = 1 at the trigger
    }
  }
};

}  // namespace

TEST_CASE("jbshap passes the whole battery at 1e-9") {
  std::vector<AxiomReport> reports = run_axiom_battery(jbshap_builder(), 200, 1e-9, 7);
  REQUIRE(reports.size() == 8);
  for (const AxiomReport& r : reports) {
    INFO(r.axiom, " violation ", r.max_violation);
    CHECK(r.pass);
  }
}

TEST_CASE("degenerate zero second function keeps linearity trivially") {
  GameInstanceGenerator gen(2, 3, 2, 5);
  GameInstance inst = gen.next();
  std::vector<double> zeros(inst.f_values.size(), 0.0);
  ValueFunction v = jbshap_builder()(inst);
  ValueFunction vz = jbshap_builder()(inst.with_f(zeros));
  for (const Coalition& s : enumerate_coalitions(inst.support.dim())) {
    CHECK(vz(s) == 0.0);
    CHECK(v(s) + vz(s) == v(s));
  }
}

TEST_CASE("ces violates linearity over distributions with a witness") {
  GameInstanceGenerator gen(2, 3, 2, 11);
  AxiomReport report = check_linearity(ces_builder(), gen, 40, 1e-9);
  CHECK(!report.pass);
  REQUIRE(report.witness.has_value());
  CHECK(report.witness->find("distribution") != std::string::npos);
}

TEST_CASE("dummy axiom: jbshap needs both f and p silent") {
  GameInstanceGenerator both(2, 4, 2, 13);
  CHECK(check_dummy(jbshap_builder(), both, 60, 1e-9).pass);

  GameInstanceGenerator f_only(2, 4, 2, 14);
  CHECK(!check_dummy_function_only(jbshap_builder(), f_only, 60, 1e-9).pass);
}

TEST_CASE("dummy axiom: bshap ignores p entirely") {
  GameInstanceGenerator gen(2, 4, 2, 15);
  CHECK(check_dummy_function_only(bshap_builder(), gen, 60, 1e-9).pass);
}

TEST_CASE("dummy axiom: ces fails when p couples the silent feature") {
  GameInstanceGenerator both(2, 4, 2, 16);
  CHECK(check_dummy(ces_builder(), both, 60, 1e-9).pass);

  GameInstanceGenerator f_only(2, 4, 2, 17);
  AxiomReport report = check_dummy_function_only(ces_builder(), f_only, 60, 1e-9);
  CHECK(!report.pass);
  CHECK(report.witness.has_value());
}

TEST_CASE("null axiom outcomes per value function") {
  GameInstanceGenerator g1(2, 4, 2, 18);
  CHECK(check_null(jbshap_builder(), g1, 60, 1e-12).pass);
  GameInstanceGenerator g2(2, 4, 2, 19);
  CHECK(check_null(bshap_builder(), g2, 60, 1e-12).pass);

  // ces_empirical: v(empty) is a dataset mean, so two datasets agreeing at x'
  // can disagree in value. Hand construction.
  const DataPoint x({1.0, 1.0});
  const DataPoint xp({0.0, 0.0});
  ScalarField f = ScalarField::linear({1.0, 1.0}, 0.0);
  GameContext ctx(f, std::nullopt, x, xp);
  Dataset d1({xp, DataPoint({2.0, 2.0})});
  Dataset d2({xp, DataPoint({5.0, 5.0})});
  // Both empirical densities give x' the same mass 1/2, yet:
  const double v1 = ces_empirical(ctx, d1)(Coalition::empty(2));
  const double v2 = ces_empirical(ctx, d2)(Coalition::empty(2));
  CHECK(v1 != v2);
}

TEST_CASE("efficiency axiom holds for jbshap and fails for bshap") {
  GameInstanceGenerator g1(2, 4, 2, 20);
  CHECK(check_efficiency(jbshap_builder(), g1, 60, 1e-12).pass);

  GameInstanceGenerator g2(2, 4, 2, 21);
  AxiomReport report = check_efficiency(bshap_builder(), g2, 60, 1e-9);
  CHECK(!report.pass);
  CHECK(report.witness.has_value());
}

TEST_CASE("rjbshap satisfies the randomized-baseline efficiency restatement") {
  GameInstanceGenerator gen(2, 3, 2, 22);
  for (int t = 0; t < 20; ++t) {
    GameInstance inst = gen.next();
    BaselineDistribution dist;
    dist.points = {inst.x_prime, inst.x};
    dist.weights = {0.5, 0.5};
    GameContext ctx(inst.f(), inst.p(), inst.x, dist);
    ValueFunction v = rjbshap(ctx, 8, 0);
    const int d = inst.support.dim();
    const ScalarField f = inst.f();
    const DensityField p = inst.p();
    // v([d]) - v(empty) = f(x)p(x) - E_baseline[f(x')p(x')], enumerated.
    const double expected =
        f(inst.x) * p(inst.x) -
        0.5 * (f(inst.x_prime) * p(inst.x_prime) + f(inst.x) * p(inst.x));
    CHECK(v(Coalition::full(d)) - v(Coalition::empty(d)) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("symmetry holds for jbshap and the checker skips broken preconditions") {
  GameInstanceGenerator gen(2, 4, 2, 23);
  AxiomReport report = check_symmetry(jbshap_builder(), gen, 60, 1e-12);
  CHECK(report.pass);
  CHECK(report.trials == 60);

  // Asymmetric explicand: precondition unmet, the instance is skipped.
  GameInstanceGenerator gen2(2, 2, 2, 24);
  int i = 0;
  int j = 0;
  GameInstance inst = gen2.next_symmetric(i, j);
  std::vector<double> x = inst.x.values();
  x[static_cast<std::size_t>(i)] = 0.0;
  x[static_cast<std::size_t>(j)] = 1.0;
  inst.x = DataPoint(x);
  CHECK(!symmetry_violation(jbshap_builder(), inst, i, j).has_value());

  // Exact Shapley then equalizes the symmetric pair.
  GameInstanceGenerator gen3(3, 3, 2, 25);
  GameInstance sym = gen3.next_symmetric(i, j);
  AttributionVector phi = exact_shapley(jbshap_builder()(sym), 3);
  CHECK(phi.phi[static_cast<std::size_t>(i)] ==
        doctest::Approx(phi.phi[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

TEST_CASE("set relevance holds for jbshap, bshap and enumerated ces") {
  GameInstanceGenerator g1(2, 3, 2, 26);
  CHECK(check_set_relevance(jbshap_builder(), g1, 30, 1e-12).pass);
  GameInstanceGenerator g2(2, 3, 2, 27);
  CHECK(check_set_relevance(bshap_builder(), g2, 30, 1e-12).pass);
  GameInstanceGenerator g3(2, 3, 2, 28);
  CHECK(check_set_relevance(ces_builder(), g3, 30, 1e-9).pass);
}

TEST_CASE("strong 1-robustness: jbshap bounded, bshap and ces blow up") {
  GameInstanceGenerator gen(2, 4, 2, 29);
  CHECK(check_strong_t_robustness_random(jbshap_builder(), gen, 100, 1.0, 1e-12).pass);

  TailTriggerFixture fx;
  AxiomReport jb = check_strong_t_robustness(jbshap_builder(), fx.base, fx.f2_values,
                                             1.0, 1e-12);
  CHECK(jb.pass);

  // epsilon is about 5e-7 while the coalition value moves by C = 1.
  AxiomReport bs =
      check_strong_t_robustness(bshap_builder(), fx.base, fx.f2_values, 1.0, 1e-12);
  CHECK(!bs.pass);
  CHECK(bs.max_violation > 0.9);

  AxiomReport ces =
      check_strong_t_robustness(ces_builder(), fx.base, fx.f2_values, 1.0, 1e-12);
  CHECK(!ces.pass);

  // Identical functions: zero epsilon, zero deltas.
  AxiomReport same = check_strong_t_robustness(jbshap_builder(), fx.base,
                                               fx.base.f_values, 1.0, 1e-12);
  CHECK(same.pass);
  CHECK(same.max_violation <= 0.0);
}

TEST_CASE("transfer: axioms carry through exact shapley for jbshap") {
  GameInstanceGenerator gen(2, 3, 2, 30);
  CHECK(check_transfer(jbshap_builder(), gen, 40, 1e-9).pass);

  // Dummy feature of the two-feature game transfers to a zero attribution,
  // and the attribution total matches the endpoint difference 1/3 - 0.
  GridSupport grid({{0.0, 1.0}, {0.0, 1.0}});
  GameInstance inst;
  inst.support = grid;
  inst.f_values = {0.0, 1.0, 0.0, 1.0};
  inst.p_values = {1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0};
  inst.x = DataPoint({1.0, 1.0});
  inst.x_prime = DataPoint({0.0, 0.0});
  AttributionVector phi = exact_shapley(jbshap_builder()(inst), 2);
  CHECK(phi.phi[0] == doctest::Approx(0.0));
  CHECK(phi.phi[0] + phi.phi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("checkers are deterministic given generator seed and trials") {
  GameInstanceGenerator g1(2, 4, 2, 99);
  GameInstanceGenerator g2(2, 4, 2, 99);
  AxiomReport a = check_linearity(jbshap_builder(), g1, 25, 1e-9);
  AxiomReport b = check_linearity(jbshap_builder(), g2, 25, 1e-9);
  CHECK(a.max_violation == b.max_violation);
  CHECK(a.pass == b.pass);
}

TEST_CASE("failing reports carry a replayable witness") {
  GameInstanceGenerator gen(2, 3, 2, 31);
  AxiomReport report = check_efficiency(bshap_builder(), gen, 40, 1e-9);
  REQUIRE(!report.pass);
  REQUIRE(report.witness.has_value());
  // The witness holds the full instance; rebuild it and reproduce the gap.
  const auto j = nlohmann::json::parse(*report.witness);
  GameInstance inst;
  inst.support = GridSupport(j.at("support").get<std::vector<std::vector<double>>>());
  inst.f_values = j.at("f_values").get<std::vector<double>>();
  inst.p_values = j.at("p_values").get<std::vector<double>>();
  inst.x = DataPoint(j.at("x").get<std::vector<double>>());
  inst.x_prime = DataPoint(j.at("x_prime").get<std::vector<double>>());
  ValueFunction v = bshap_builder()(inst);
  const int d = inst.support.dim();
  const ScalarField f = inst.f();
  const DensityField p = inst.p();
  const double expected = f(inst.x) * p(inst.x) - f(inst.x_prime) * p(inst.x_prime);
  const double got = v(Coalition::full(d)) - v(Coalition::empty(d));
  CHECK(std::fabs(got - expected) == doctest::Approx(report.max_violation));
}
