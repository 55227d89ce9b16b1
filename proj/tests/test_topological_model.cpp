#include <algorithm>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "koopman/topological_model.hpp"

using namespace koopman;

namespace {

SemiflowMap three_cycle() { return SemiflowMap{{1, 2, 0}}; }

// discrete-time evolution procedure T(s) = T^{floor(s)}
auto step_semigroup(const MarkovOperator& t) {
  return [&t](double s, std::span<const cx> v) {
    std::vector<cx> out(v.begin(), v.end());
    for (int k = 0; k < static_cast<int>(s); ++k) out = t.matrix.apply(out);
    return out;
  };
}

}  // namespace

TEST_CASE("build_finite_model") {
  FiniteProbabilitySpace u3 = FiniteProbabilitySpace::uniform(3);

  SUBCASE("identity operator") {
    MarkovOperator id = koopman_of_map(u3, SemiflowMap{{0, 1, 2}});
    TopologicalModel model = build_finite_model(u3, id);
    CHECK(model.psi == SemiflowMap{{0, 1, 2}});
    CHECK(model.nu == u3.weights());
    CHECK(model.k_points == u3.labels());
    CHECK(verify_model_isomorphism(model, id).max() == 0.0);
  }

  SUBCASE("3-cycle") {
    MarkovOperator cyc = koopman_of_map(u3, three_cycle());
    TopologicalModel model = build_finite_model(u3, cyc);
    CHECK(model.psi == three_cycle());
    CHECK(verify_model_isomorphism(model, cyc).max() == 0.0);
  }

  SUBCASE("averaging operator is rejected") {
    ComplexMatrix avg(2);
    avg(0, 0) = avg(0, 1) = avg(1, 0) = avg(1, 1) = 0.5;
    FiniteProbabilitySpace u2 = FiniteProbabilitySpace::uniform(2);
    CHECK_THROWS_WITH_AS(build_finite_model(u2, MarkovOperator{avg, u2}),
                         doctest::Contains("NotMarkovLattice"), Error);
  }
}

TEST_CASE("verify_model_isomorphism flags corrupted models") {
  FiniteProbabilitySpace u3 = FiniteProbabilitySpace::uniform(3);
  MarkovOperator cyc = koopman_of_map(u3, three_cycle());
  TopologicalModel good = build_finite_model(u3, cyc);

  SUBCASE("wrong invariant measure shows up in measure transport") {
    TopologicalModel bad = good;
    bad.nu = {0.5, 0.25, 0.25};
    ModelResiduals res = verify_model_isomorphism(bad, cyc);
    // residual is exactly the mu - nu discrepancy
    CHECK(res.measure_transport == doctest::Approx(0.5 - 1.0 / 3.0));
    CHECK(res.invariance > 0.0);
  }

  SUBCASE("wrong map shows up in intertwining") {
    TopologicalModel bad = good;
    bad.psi = SemiflowMap{{0, 1, 2}};
    ModelResiduals res = verify_model_isomorphism(bad, cyc);
    CHECK(res.intertwining >= 1.0 / 3.0);  // at least the smallest weight
  }
}

TEST_CASE("model of T^k composes the model map k times") {
  FiniteProbabilitySpace u4 = FiniteProbabilitySpace::uniform(4);
  SemiflowMap phi{{1, 2, 3, 0}};
  MarkovOperator t = koopman_of_map(u4, phi);

  MarkovOperator power = t;
  SemiflowMap composed = phi;
  for (int k = 2; k <= 4; ++k) {
    power = MarkovOperator{power.matrix * t.matrix, u4};
    composed = composed.after(phi);
    TopologicalModel model = build_finite_model(u4, power);
    CHECK(model.psi == composed);
    CHECK(verify_model_isomorphism(model, power).max() == 0.0);
  }
}

TEST_CASE("every permutation operator on n <= 4 atoms has an exact model") {
  for (std::size_t n = 1; n <= 4; ++n) {
    FiniteProbabilitySpace u = FiniteProbabilitySpace::uniform(n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      MarkovOperator t = koopman_of_map(u, SemiflowMap{perm});
      TopologicalModel model = build_finite_model(u, t);
      CHECK(verify_model_isomorphism(model, t).max() == 0.0);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("separable generating systems") {
  FiniteProbabilitySpace u3 = FiniteProbabilitySpace::uniform(3);
  MarkovOperator id = koopman_of_map(u3, SemiflowMap{{0, 1, 2}});

  SUBCASE("all singletons separate under the identity") {
    std::vector<MeasureAlgebraSet> sets;
    for (std::size_t i = 0; i < 3; ++i) sets.push_back(MeasureAlgebraSet::singleton(3, i));
    std::vector<double> times{1.0};
    GeneratingSystemReport rep =
        separable_generating_system(u3, sets, times, step_semigroup(id));
    CHECK(rep.separates_atoms);
    CHECK(rep.partition.size() == 3);
  }

  SUBCASE("a single indicator under the identity does not separate") {
    std::vector<MeasureAlgebraSet> sets{MeasureAlgebraSet::singleton(3, 0)};
    std::vector<double> times{1.0};
    GeneratingSystemReport rep =
        separable_generating_system(u3, sets, times, step_semigroup(id));
    CHECK(!rep.separates_atoms);
    REQUIRE(rep.partition.size() == 2);
    CHECK(rep.partition[0] == std::vector<std::size_t>{0});
    CHECK(rep.partition[1] == std::vector<std::size_t>{1, 2});
  }

  SUBCASE("the orbit of one indicator under the 3-cycle separates") {
    MarkovOperator cyc = koopman_of_map(u3, three_cycle());
    std::vector<MeasureAlgebraSet> sets{MeasureAlgebraSet::singleton(3, 0)};
    std::vector<double> times{1.0, 2.0};
    GeneratingSystemReport rep =
        separable_generating_system(u3, sets, times, step_semigroup(cyc));
    CHECK(rep.separates_atoms);
  }
}
