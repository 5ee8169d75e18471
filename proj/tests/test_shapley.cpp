#include <doctest.h>

#include <bit>
#include <cmath>
#include <numeric>

#include "jshap/rng.hpp"
#include "jshap/shapley.hpp"

using namespace jshap;

namespace {

ValueFunction random_table_game(int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values(std::size_t{1} << d);
  for (double& v : values) v = rng.uniform(0.0, 1.0);
  return table_game(d, std::move(values));
}

}  // namespace

TEST_CASE("exact shapley on the two-feature joint-baseline game") {
  // Coalition values 0, 0, 1/3, 1/3 on (empty, {A}, {B}, {A,B}).
  ValueFunction v = table_game(2, {0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0});
  AttributionVector phi = exact_shapley(v, 2);
  CHECK(phi.phi[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(phi.phi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(std::fabs(phi.efficiency_residual) < 1e-10);
}

TEST_CASE("exact shapley on the conditional-expectation game") {
  // Values 2/3, 1, 1, 1: both features end up equal.
  ValueFunction v = table_game(2, {2.0 / 3.0, 1.0, 1.0, 1.0});
  AttributionVector phi = exact_shapley(v, 2);
  CHECK(phi.phi[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(phi.phi[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("glove game with co-occurrence weighting splits 1/4 1/4 1/2") {
  // Players 0 and 1 hold left gloves, player 2 the right one; the pair count
  // is scaled by 1/2 whenever exactly one of {0, 1} is present.
  std::vector<double> values(8, 0.0);
  for (std::uint64_t mask = 0; mask < 8; ++mask) {
    const bool l0 = mask & 1;
    const bool l1 = mask & 2;
    const bool r = mask & 4;
    const double pairs = r && (l0 || l1) ? 1.0 : 0.0;
    const double weight = (l0 != l1) ? 0.5 : 1.0;
    values[mask] = pairs * weight;
  }
  AttributionVector phi = exact_shapley(table_game(3, values), 3);
  CHECK(phi.phi[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(phi.phi[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(phi.phi[2] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("exact shapley satisfies the set-to-explanation axioms") {
  const int d = 4;
  ValueFunction v1 = random_table_game(d, 100);
  ValueFunction v2 = random_table_game(d, 200);
  AttributionVector p1 = exact_shapley(v1, d);
  AttributionVector p2 = exact_shapley(v2, d);

  // Efficiency.
  const double span1 = v1(Coalition::full(d)) - v1(Coalition::empty(d));
  CHECK(std::accumulate(p1.phi.begin(), p1.phi.end(), 0.0) ==
        doctest::Approx(span1).epsilon(1e-12));

  // Linearity at machine precision.
  std::vector<double> sum_values(std::size_t{1} << d);
  for (std::uint64_t mask = 0; mask < sum_values.size(); ++mask) {
    const Coalition s = Coalition::from_mask(mask, d);
    sum_values[mask] = v1(s) + v2(s);
  }
  AttributionVector ps = exact_shapley(table_game(d, sum_values), d);
  for (int i = 0; i < d; ++i) {
    CHECK(ps.phi[static_cast<std::size_t>(i)] ==
          doctest::Approx(p1.phi[static_cast<std::size_t>(i)] +
                          p2.phi[static_cast<std::size_t>(i)])
              .epsilon(1e-13));
  }

  // Symmetry: a game symmetric in players 0 and 1.
  std::vector<double> sym_values(std::size_t{1} << d);
  for (std::uint64_t mask = 0; mask < sym_values.size(); ++mask) {
    sym_values[mask] = static_cast<double>(std::popcount(mask & 0b0011)) * 0.5 +
                       static_cast<double>(std::popcount(mask & 0b1100)) * 0.25;
  }
  AttributionVector psym = exact_shapley(table_game(d, sym_values), d);
  CHECK(psym.phi[0] == doctest::Approx(psym.phi[1]).epsilon(1e-14));

  // Dummy: a player never changing the value gets zero.
  std::vector<double> dummy_values(std::size_t{1} << d);
  for (std::uint64_t mask = 0; mask < dummy_values.size(); ++mask) {
    dummy_values[mask] = static_cast<double>(std::popcount(mask & 0b1110));
  }
  AttributionVector pdum = exact_shapley(table_game(d, dummy_values), d);
  CHECK(pdum.phi[0] == doctest::Approx(0.0).epsilon(1e-14));

  CHECK_THROWS_AS(exact_shapley(v1, 21), CapacityError);
}

TEST_CASE("one permutation recovers an additive game exactly") {
  const int d = 5;
  const std::vector<double> c{0.3, -1.2, 0.05, 2.0, -0.4};
  std::vector<double> values(std::size_t{1} << d, 0.0);
  for (std::uint64_t mask = 0; mask < values.size(); ++mask) {
    for (int i = 0; i < d; ++i) {
      if (mask & (1ULL << i)) values[mask] += c[static_cast<std::size_t>(i)];
    }
  }
  ValueFunction v = table_game(d, values);
  AttributionVector phi = permutation_shapley(v, d, 1, 77);
  for (int i = 0; i < d; ++i) {
    CHECK(phi.phi[static_cast<std::size_t>(i)] ==
          doctest::Approx(c[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("permutation sampling converges to the exact oracle") {
  const int d = 8;
  ValueFunction v = random_table_game(d, 4242);
  AttributionVector oracle = exact_shapley(v, d);
  AttributionVector sampled = permutation_shapley(v, d, 10000, 9);
  double linf = 0.0;
  for (int i = 0; i < d; ++i) {
    linf = std::max(linf, std::fabs(sampled.phi[static_cast<std::size_t>(i)] -
                                    oracle.phi[static_cast<std::size_t>(i)]));
  }
  CHECK(linf < 0.02);
}

TEST_CASE("permutation sampling is unbiased across seeds") {
  const int d = 6;
  ValueFunction v = random_table_game(d, 321);
  AttributionVector oracle = exact_shapley(v, d);

  const int runs = 100;
  const int perms = 50;
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  std::vector<double> m2(static_cast<std::size_t>(d), 0.0);
  for (int r = 0; r < runs; ++r) {
    AttributionVector est = permutation_shapley(v, d, perms, 1000 + r);
    for (int i = 0; i < d; ++i) {
      const double x = est.phi[static_cast<std::size_t>(i)];
      const double delta = x - mean[static_cast<std::size_t>(i)];
      mean[static_cast<std::size_t>(i)] += delta / (r + 1);
      m2[static_cast<std::size_t>(i)] += delta * (x - mean[static_cast<std::size_t>(i)]);
    }
  }
  for (int i = 0; i < d; ++i) {
    const double se = std::sqrt(m2[static_cast<std::size_t>(i)] / (runs - 1) / runs);
    CHECK(std::fabs(mean[static_cast<std::size_t>(i)] -
                    oracle.phi[static_cast<std::size_t>(i)]) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("seed determinism of the permutation estimator") {
  ValueFunction v = random_table_game(6, 55);
  AttributionVector a = permutation_shapley(v, 6, 200, 1234);
  AttributionVector b = permutation_shapley(v, 6, 200, 1234);
  CHECK(a.phi == b.phi);
}

TEST_CASE("truncated sampler with frac 0 is bit-identical to the plain one") {
  ValueFunction v = random_table_game(7, 8);
  AttributionVector plain = permutation_shapley(v, 7, 300, 42);
  AttributionVector truncated = truncated_permutation_jbshap(v, 7, 300, 0.0, 42);
  CHECK(plain.phi == truncated.phi);
}

TEST_CASE("truncation is a no-op on games that already vanish below the floor") {
  const int d = 5;
  const double frac = 0.6;  // floor = 3
  Rng rng(2);
  std::vector<double> values(std::size_t{1} << d, 0.0);
  for (std::uint64_t mask = 0; mask < values.size(); ++mask) {
    if (std::popcount(mask) >= 3) values[mask] = rng.uniform(0.0, 1.0);
  }
  ValueFunction v = table_game(d, values);
  AttributionVector plain = permutation_shapley(v, d, 500, 77);
  AttributionVector truncated = truncated_permutation_jbshap(v, d, 500, frac, 77);
  CHECK(plain.phi == truncated.phi);
}

TEST_CASE("truncated estimator stays near exact on the full-set indicator game") {
  const int d = 3;
  std::vector<double> values(8, 0.0);
  values[7] = 1.0;
  ValueFunction v = table_game(d, values);
  AttributionVector exact = exact_shapley(v, d);
  for (int i = 0; i < d; ++i) {
    CHECK(exact.phi[static_cast<std::size_t>(i)] ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  AttributionVector est = truncated_permutation_jbshap(v, d, 30000, 1.0, 5);
  for (int i = 0; i < d; ++i) {
    CHECK(std::fabs(est.phi[static_cast<std::size_t>(i)] - 1.0 / 3.0) <= 0.02);
  }
}

TEST_CASE("global aggregation sums and normalizes") {
  AttributionVector a;
  a.phi = {2.0, -2.0};
  GlobalAttribution normalized = global_shapley({a}, true);
  CHECK(normalized.values[0] == doctest::Approx(0.5));
  CHECK(normalized.values[1] == doctest::Approx(-0.5));

  AttributionVector b;
  b.phi = {1.0, 0.0};
  AttributionVector c;
  c.phi = {0.0, 1.0};
  GlobalAttribution sum = global_shapley({b, c}, false);
  CHECK(sum.values == std::vector<double>{1.0, 1.0});

  AttributionVector zero;
  zero.phi = {0.0, 0.0};
  CHECK_THROWS_AS(global_shapley({zero}, true), DegenerateNormalizationError);
  CHECK_THROWS_AS(global_shapley({}, false), InvalidInputError);

  // Normalized absolute values sum to one.
  GlobalAttribution norm2 = global_shapley({b, c, a}, true);
  CHECK(std::fabs(norm2.values[0]) + std::fabs(norm2.values[1]) ==
        doctest::Approx(1.0).epsilon(1e-12));
}
