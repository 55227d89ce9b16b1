#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "koopman/measure_space.hpp"
#include "koopman/rng.hpp"

using namespace koopman;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

MeasurableFunction fn(std::vector<cx> v) { return MeasurableFunction(std::move(v)); }
}  // namespace

TEST_CASE("space construction validates weights") {
  CHECK_NOTHROW(FiniteProbabilitySpace({0.5, 0.25, 0.25}));
  CHECK_NOTHROW(FiniteProbabilitySpace({0.25, 0.25, 0.25, 0.25}));

  CHECK_THROWS_WITH_AS(FiniteProbabilitySpace({0.5, 0.6}), doctest::Contains("WeightsDoNotSumToOne"),
                       Error);
  CHECK_THROWS_WITH_AS(FiniteProbabilitySpace({1.0, 0.0}), doctest::Contains("NonPositiveWeight"),
                       Error);
  CHECK_THROWS_WITH_AS(FiniteProbabilitySpace({1.5, -0.5}), doctest::Contains("NonPositiveWeight"),
                       Error);
  CHECK_THROWS_AS(FiniteProbabilitySpace({}), Error);

  FiniteProbabilitySpace s({0.5, 0.5}, {"a", "b"});
  CHECK(s.labels()[1] == "b");
  CHECK(FiniteProbabilitySpace::uniform(4).weight(2) == doctest::Approx(0.25));
}

TEST_CASE("integral") {
  FiniteProbabilitySpace half({0.5, 0.5});
  CHECK(integral(half, fn({2.0, 0.0})).real() == doctest::Approx(1.0));

  FiniteProbabilitySpace s({0.5, 0.25, 0.25});
  CHECK(integral(s, MeasurableFunction::one(3)).real() == doctest::Approx(1.0));
  CHECK(integral(s, fn({1.0, -1.0, 0.0})).real() == doctest::Approx(0.25));

  CHECK_THROWS_AS(integral(s, MeasurableFunction::one(2)), Error);
}

TEST_CASE("integral of an indicator is the measure of the set") {
  FiniteProbabilitySpace s({0.5, 0.125, 0.125, 0.25});
  for (std::uint64_t mask = 0; mask < 16; ++mask) {
    MeasureAlgebraSet m = MeasureAlgebraSet::from_mask(4, mask);
    CHECK(integral(s, indicator(s, m)).real() == doctest::Approx(measure(s, m)).epsilon(1e-14));
  }
}

TEST_CASE("lp norms") {
  FiniteProbabilitySpace half({0.5, 0.5});
  CHECK(lp_norm(half, fn({1.0, -1.0}), 1.0) == doctest::Approx(1.0));
  CHECK(lp_norm(half, fn({1.0, -1.0}), kInf) == doctest::Approx(1.0));
  CHECK(lp_norm(half, fn({3.0, 0.0}), 2.0) == doctest::Approx(3.0 / std::sqrt(2.0)));

  CHECK_THROWS_WITH_AS(lp_norm(half, fn({1.0, 1.0}), 0.5), doctest::Contains("InvalidExponent"),
                       Error);
}

TEST_CASE("fractional exponents work like any other p") {
  FiniteProbabilitySpace half({0.5, 0.5});
  // (0.5 * 3^1.5)^(2/3)
  CHECK(lp_norm(half, fn({3.0, 0.0}), 1.5) == doctest::Approx(1.8898815748423097).epsilon(1e-15));

  FiniteProbabilitySpace u3 = FiniteProbabilitySpace::uniform(3);
  MeasurableFunction f = fn({1.0, -2.0, 1.0});
  CHECK(lp_norm(u3, f, 1.5) == doctest::Approx(1.3733765179034298).epsilon(1e-15));
  // sits between the p = 1 and p = 2 values
  CHECK(lp_norm(u3, f, 1.0) < lp_norm(u3, f, 1.5));
  CHECK(lp_norm(u3, f, 1.5) < lp_norm(u3, f, 2.0));
}

TEST_CASE("lp norm is monotone in p on probability spaces") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + rng.next_index(6);
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& x : w) {
      x = 0.1 + rng.next_double();
      sum += x;
    }
    for (auto& x : w) x /= sum;
    FiniteProbabilitySpace s(w);
    MeasurableFunction f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = rng.next_complex(2.0);
    double n1 = lp_norm(s, f, 1.0);
    double n2 = lp_norm(s, f, 2.0);
    double ninf = lp_norm(s, f, kInf);
    CHECK(n1 <= n2 + 1e-12);
    CHECK(n2 <= ninf + 1e-12);
  }
}

TEST_CASE("pointwise product") {
  MeasurableFunction f = fn({cx(2.0, 1.0), cx(-1.0, 0.0), cx(0.0, 3.0)});
  MeasurableFunction one = MeasurableFunction::one(3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(pointwise_product(one, f)[i] == f[i]);

  FiniteProbabilitySpace s = FiniteProbabilitySpace::uniform(3);
  MeasureAlgebraSet m = MeasureAlgebraSet::from_mask(3, 0b011);
  MeasureAlgebraSet nset = MeasureAlgebraSet::from_mask(3, 0b110);
  MeasurableFunction prod = pointwise_product(indicator(s, m), indicator(s, nset));
  MeasurableFunction expect = indicator(s, set_intersection(m, nset));
  for (std::size_t i = 0; i < 3; ++i) CHECK(prod[i] == expect[i]);

  MeasurableFunction p = pointwise_product(fn({1.0, 2.0}), fn({3.0, -1.0}));
  CHECK(p[0] == cx(3.0, 0.0));
  CHECK(p[1] == cx(-2.0, 0.0));

  CHECK_THROWS_AS(pointwise_product(fn({1.0}), fn({1.0, 2.0})), Error);
}

TEST_CASE("indicator") {
  FiniteProbabilitySpace s = FiniteProbabilitySpace::uniform(3);
  MeasurableFunction full = indicator(s, MeasureAlgebraSet::full(3));
  MeasurableFunction none = indicator(s, MeasureAlgebraSet::empty(3));
  MeasurableFunction first = indicator(s, MeasureAlgebraSet::singleton(3, 0));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(full[i] == cx(1.0, 0.0));
    CHECK(none[i] == cx(0.0, 0.0));
  }
  CHECK(first[0] == cx(1.0, 0.0));
  CHECK(first[1] == cx(0.0, 0.0));
  CHECK(first[2] == cx(0.0, 0.0));
}

TEST_CASE("generated partition") {
  FiniteProbabilitySpace s = FiniteProbabilitySpace::uniform(3);
  MeasurableFunction ia = indicator(s, MeasureAlgebraSet::singleton(3, 0));
  MeasurableFunction ib = indicator(s, MeasureAlgebraSet::singleton(3, 1));

  std::vector<MeasurableFunction> just_one{MeasurableFunction::one(3)};
  auto p1 = generated_partition(s, just_one);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0] == std::vector<std::size_t>{0, 1, 2});

  std::vector<MeasurableFunction> just_a{ia};
  auto p2 = generated_partition(s, just_a);
  REQUIRE(p2.size() == 2);
  CHECK(p2[0] == std::vector<std::size_t>{0});
  CHECK(p2[1] == std::vector<std::size_t>{1, 2});

  std::vector<MeasurableFunction> ab{ia, ib};
  auto p3 = generated_partition(s, ab);
  CHECK(p3.size() == 3);
}

TEST_CASE("adding products of generators does not refine the partition") {
  SplitMix64 rng(11);
  FiniteProbabilitySpace s = FiniteProbabilitySpace::uniform(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MeasurableFunction> fs;
    for (int j = 0; j < 3; ++j) {
      MeasurableFunction f(6);
      for (std::size_t i = 0; i < 6; ++i) f[i] = cx(static_cast<double>(rng.next_index(3)), 0.0);
      fs.push_back(std::move(f));
    }
    auto base = generated_partition(s, fs);
    std::vector<MeasurableFunction> extended = fs;
    for (std::size_t i = 0; i < fs.size(); ++i)
      for (std::size_t j = i; j < fs.size(); ++j)
        extended.push_back(pointwise_product(fs[i], fs[j]));
    CHECK(generated_partition(s, extended) == base);
  }
}
