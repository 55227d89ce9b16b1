#include <cmath>
#include <vector>

#include "doctest.h"
#include "koopman/semigroup_engine.hpp"
#include "koopman/rng.hpp"

using namespace koopman;

namespace {

GeneratorMatrix diffusion2() {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
  ComplexMatrix a(2);
  a(0, 0) = -1.0; a(0, 1) = 1.0;
  a(1, 0) = 1.0;  a(1, 1) = -1.0;
  return GeneratorMatrix{std::move(a), u2};
}

GeneratorMatrix diag_gen(const FiniteProbabilitySpace& s, std::vector<cx> q) {
  ComplexMatrix a(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) a(i, i) = q[i];
  return GeneratorMatrix{std::move(a), s};
}

double l1_dist(const FiniteProbabilitySpace& s, const MeasurableFunction& a,
               const MeasurableFunction& b) {
  MeasurableFunction d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return lp_norm(s, d, 1.0);
}

// random generator forms: diag(q), permutation-conjugated diag, diffusion type
GeneratorMatrix random_suite_generator(SplitMix64& rng) {
  std::size_t n = 2 + rng.next_index(6);
  FiniteProbabilitySpace u = FiniteProbabilitySpace::uniform(n);
  int kind = static_cast<int>(rng.next_index(3));
  ComplexMatrix a(n);
  if (kind == 0 || kind == 1) {
    std::vector<cx> q(n);
    for (auto& x : q) x = cx(rng.next_range(-1.0, 1.0), 0.0);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = q[i];
    if (kind == 1) {
      // conjugate by a random permutation
      std::vector<std::size_t> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = i;
      for (std::size_t i = n; i-- > 1;) std::swap(p[i], p[rng.next_index(i + 1)]);
      ComplexMatrix b(n);
      for (std::size_t i = 0; i < n; ++i) b(p[i], p[i]) = a(i, i);
      a = b;
    }
  } else {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (r != c && rng.next_double() < 0.7) a(r, c) = 0.1 + 0.9 * rng.next_double();
    for (std::size_t r = 0; r < n; ++r) {
      cx s(0.0, 0.0);
      for (std::size_t c = 0; c < n; ++c)
        if (c != r) s += a(r, c);
      a(r, r) = -s;
    }
  }
  return GeneratorMatrix{std::move(a), u};
}

}  // namespace

TEST_CASE("expm_evolve closed forms") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
  MeasurableFunction f(std::vector<cx>{cx(1.0, 0.5), cx(-2.0, 0.0)});

  SUBCASE("zero generator is the identity semigroup") {
    GeneratorMatrix zero{ComplexMatrix(2), u2};
    for (double t : {0.0, 0.5, 2.0}) {
      MeasurableFunction g = expm_evolve(zero, t, f);
      for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(g[i] - f[i]) < 1e-14);
    }
  }

  SUBCASE("scalar generator scales by e^{ct}") {
    double c = 0.37;
    GeneratorMatrix a = diag_gen(u2, {cx(c, 0.0), cx(c, 0.0)});
    for (double t : {0.25, 1.0, 3.0}) {
      MeasurableFunction g = expm_evolve(a, t, f);
      for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(g[i] - std::exp(c * t) * f[i]) < 1e-12 * std::exp(c * t));
    }
  }

  SUBCASE("two-atom diffusion against the eigendecomposition formula") {
    GeneratorMatrix a = diffusion2();
    for (double t : {0.1, 0.7, 2.0}) {
      ComplexMatrix et = evolution_operator(a, t);
      double plus = (1.0 + std::exp(-2.0 * t)) / 2.0;
      double minus = (1.0 - std::exp(-2.0 * t)) / 2.0;
      CHECK(std::abs(et(0, 0) - cx(plus, 0.0)) < 1e-13);
      CHECK(std::abs(et(0, 1) - cx(minus, 0.0)) < 1e-13);
      CHECK(std::abs(et(1, 0) - cx(minus, 0.0)) < 1e-13);
      CHECK(std::abs(et(1, 1) - cx(plus, 0.0)) < 1e-13);
    }
  }
}

TEST_CASE("semigroup law on random bounded generators") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t n = 2 + rng.next_index(5);
    FiniteProbabilitySpace u = FiniteProbabilitySpace::uniform(n);
    ComplexMatrix m(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) m(r, c) = rng.next_complex();
    double norm = m.norm_inf();
    if (norm > 2.0) m *= cx(2.0 / norm, 0.0);
    GeneratorMatrix a{std::move(m), u};

    MeasurableFunction f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = rng.next_complex();

    double s = rng.next_range(0.0, 2.0), t = rng.next_range(0.0, 2.0);
    MeasurableFunction joint = expm_evolve(a, s + t, f);
    MeasurableFunction stepped = expm_evolve(a, s, expm_evolve(a, t, f));
    CHECK(l1_dist(u, joint, stepped) <= 1e-10);
  }
}

TEST_CASE("derivation_check") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);

  CHECK(derivation_check(GeneratorMatrix{ComplexMatrix(2), u2}).pass);

  // diag(q), q != 0: not a derivation, reported at A1 = q
  DerivationReport diag_rep = derivation_check(diag_gen(u2, {cx(0.5, 0.0), cx(-0.25, 0.0)}));
  CHECK(!diag_rep.pass);
  CHECK(diag_rep.failed_check == "unit");
  CHECK(diag_rep.deviation == doctest::Approx(0.5));

  // diffusion: A1 = 0 but the Leibniz rule fails on f = g = 1_a:
  // A(f^2) = Af = (-1, 1) while 2 f Af = (-2, 0)
  DerivationReport diff_rep = derivation_check(diffusion2());
  CHECK(!diff_rep.pass);
  CHECK(diff_rep.failed_check == "leibniz");
  CHECK(diff_rep.i == 0);
  CHECK(diff_rep.j == 0);
  CHECK(diff_rep.deviation == doctest::Approx(1.0));
}

TEST_CASE("adjoint_measure_check") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
  CHECK(adjoint_measure_check(GeneratorMatrix{ComplexMatrix(2), u2}));
  CHECK(adjoint_measure_check(diffusion2()));
  CHECK(!adjoint_measure_check(diag_gen(u2, {cx(1.0, 0.0), cx(-1.0, 0.0)})));
}

TEST_CASE("kato_check") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
  CHECK(kato_check(GeneratorMatrix{ComplexMatrix(2), u2}).pass);

  // multiplication operators satisfy the Kato equality atomwise
  CHECK(kato_check(diag_gen(u2, {cx(0.8, 0.0), cx(-0.3, 0.0)})).pass);

  // diffusion with a sign change: A|f| = A1 = 0 but sign(f) Af = (-2, -2)
  KatoReport rep = kato_check(diffusion2());
  CHECK(!rep.pass);
  CHECK(rep.deviation == doctest::Approx(2.0));
  REQUIRE(rep.witness.has_value());
}

TEST_CASE("classify_generator") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);

  SUBCASE("zero generator") {
    GeneratorVerdict v = classify_generator(GeneratorMatrix{ComplexMatrix(2), u2});
    CHECK(v.derivation.pass);
    CHECK(v.q_is_zero);
    CHECK(v.fixes_measure);
    CHECK(v.kato.pass);
    CHECK(v.markov_generator());
  }

  SUBCASE("multiplication generator decomposes exactly") {
    GeneratorVerdict v = classify_generator(diag_gen(u2, {cx(0.5, 0.0), cx(-1.5, 0.0)}));
    CHECK(v.q[0] == cx(0.5, 0.0));
    CHECK(v.q[1] == cx(-1.5, 0.0));
    CHECK(v.delta.matrix.max_abs_entry() == 0.0);
    CHECK(v.derivation.pass);
    CHECK(v.kato.pass);
    CHECK(!v.fixes_measure);
  }

  SUBCASE("diffusion fails both derivation and Kato") {
    GeneratorVerdict v = classify_generator(diffusion2());
    CHECK(!v.derivation.pass);
    CHECK(!v.kato.pass);
    CHECK(v.fixes_measure);
    CHECK(v.q_is_zero);
  }
}

TEST_CASE("kato equality passes exactly when delta is a derivation") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    GeneratorMatrix a = random_suite_generator(rng);
    GeneratorVerdict v = classify_generator(a);
    CHECK(v.kato.pass == v.derivation.pass);
  }
}

TEST_CASE("lattice flags of the evolved operators follow the generator verdict") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);

  // delta-derivation + measure fixed: evolution stays Markov lattice
  GeneratorMatrix zero{ComplexMatrix(2), u2};
  for (double t : {0.5, 1.0, 2.0}) {
    OperatorVerdict v =
        classify_operator(MarkovOperator{evolution_operator(zero, t), u2});
    CHECK(v.markov_lattice());
  }

  // diffusion fails the derivation: every positive time is non-lattice
  GeneratorMatrix diff = diffusion2();
  for (double t : {0.5, 1.0, 2.0}) {
    OperatorVerdict v =
        classify_operator(MarkovOperator{evolution_operator(diff, t), u2});
    CHECK(v.markov());
    CHECK(!v.lattice);
  }
}

TEST_CASE("perturbed_evolve") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
  MeasurableFunction f(std::vector<cx>{cx(1.0, 0.0), cx(0.5, -0.5)});

  SUBCASE("delta = 0, q = c 1 scales by e^{ct}") {
    double c = 0.6;
    PerturbationSpec spec{GeneratorMatrix{ComplexMatrix(2), u2},
                          MeasurableFunction::constant(2, cx(c, 0.0))};
    for (double t : {0.5, 1.0}) {
      MeasurableFunction g = perturbed_evolve(spec, t, f, 64);
      for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(g[i] - std::exp(c * t) * f[i]) < 1e-12);
    }
  }

  SUBCASE("t = 0 returns f") {
    PerturbationSpec spec{diffusion2(), MeasurableFunction::constant(2, cx(0.3, 0.0))};
    MeasurableFunction g = perturbed_evolve(spec, 0.0, f, 16);
    for (std::size_t i = 0; i < 2; ++i) CHECK(g[i] == f[i]);
  }
}

TEST_CASE("verify_perturbation") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
  MeasurableFunction f(std::vector<cx>{cx(1.0, 0.0), cx(-1.0, 1.0)});
  std::vector<double> grid{0.25, 1.0};

  SUBCASE("multiplication semigroup reproduces exactly") {
    PerturbationSpec spec{GeneratorMatrix{ComplexMatrix(2), u2},
                          MeasurableFunction(std::vector<cx>{cx(0.4, 0.0), cx(-0.2, 0.0)})};
    PerturbationReport rep = verify_perturbation(spec, grid, f, 1e-12, 64);
    CHECK(rep.pass);
    CHECK(rep.max_residual < 1e-12);
  }

  SUBCASE("varying potential over the trivial derivation") {
    // on finite atomic spaces the only derivation is zero, so the matrix
    // route is exercised with delta = 0 and a non-constant q
    PerturbationSpec spec{GeneratorMatrix{ComplexMatrix(2), u2},
                          MeasurableFunction(std::vector<cx>{cx(0.3, 0.0), cx(-0.2, 0.0)})};
    PerturbationReport rep = verify_perturbation(spec, grid, f, 1e-9, 256);
    CHECK(rep.pass);
  }

  SUBCASE("wrong q is detected") {
    // formula evaluated with q+1 against the true generator delta + q
    double c = 0.0;
    PerturbationSpec wrong{GeneratorMatrix{ComplexMatrix(2), u2},
                           MeasurableFunction::constant(2, cx(c + 1.0, 0.0))};
    GeneratorMatrix truth = diag_gen(u2, {cx(c, 0.0), cx(c, 0.0)});
    MeasurableFunction lhs = perturbed_evolve(wrong, 1.0, MeasurableFunction::one(2), 64);
    MeasurableFunction rhs = expm_evolve(truth, 1.0, MeasurableFunction::one(2));
    CHECK(l1_dist(u2, lhs, rhs) >= 0.1);
  }

}

TEST_CASE("cesaro_average") {
  FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
  MeasurableFunction f(std::vector<cx>{cx(2.0, 1.0), cx(-1.0, 0.0)});

  SUBCASE("identity semigroup averages to f") {
    auto id = [](double, std::span<const cx> v) { return std::vector<cx>(v.begin(), v.end()); };
    for (double t : {0.1, 1.0, 5.0}) {
      std::vector<cx> avg = cesaro_average(id, t, f.values, 32);
      for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(avg[i] - f[i]) < 1e-13);
    }
  }

  SUBCASE("scalar semigroup has closed-form average") {
    double c = 0.8;
    GeneratorMatrix a = diag_gen(u2, {cx(c, 0.0), cx(c, 0.0)});
    auto evolve = [&](double s, std::span<const cx> v) {
      return evolution_operator(a, s).apply(v);
    };
    double t = 1.3;
    std::vector<cx> avg = cesaro_average(evolve, t, f.values, 256);
    double factor = (std::exp(c * t) - 1.0) / (c * t);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(avg[i] - factor * f[i]) < 1e-11);
  }
}

TEST_CASE("continuity_bound_check on the identity semigroup") {
  MeasurableFunction f(std::vector<cx>{cx(1.0, 0.0), cx(0.0, 2.0)});
  auto id = [](double, std::span<const cx> v) { return std::vector<cx>(v.begin(), v.end()); };
  auto inf_norm = [](std::span<const cx> v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
  };
  std::vector<double> s_grid{0.0, 0.1, 0.5, 1.0};
  ContinuityBoundReport rep = continuity_bound_check(id, f.values, 1.0, s_grid, inf_norm, 64);
  CHECK(rep.pass);
  for (double lhs : rep.lhs_values) CHECK(lhs < 1e-13);
}
