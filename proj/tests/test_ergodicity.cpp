#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "koopman/ergodicity.hpp"
#include "koopman/rng.hpp"

using namespace koopman;

namespace {
const double kSqrt2 = 1.4142135623730951;
}

TEST_CASE("invariant_sets") {
  SUBCASE("3-cycle is ergodic") {
    auto sets = invariant_sets(SemiflowMap{{1, 2, 0}});
    CHECK(sets.size() == 2);
    CHECK(is_ergodic(SemiflowMap{{1, 2, 0}}));
  }

  SUBCASE("identity on two atoms has all four subsets") {
    auto sets = invariant_sets(SemiflowMap{{0, 1}});
    CHECK(sets.size() == 4);
  }

  SUBCASE("a 2-cycle plus a fixed point") {
    auto sets = invariant_sets(SemiflowMap{{1, 0, 2}});
    REQUIRE(sets.size() == 4);
    bool found_pair = false, found_fixed = false;
    for (const auto& m : sets) {
      if (m == MeasureAlgebraSet::from_mask(3, 0b011)) found_pair = true;
      if (m == MeasureAlgebraSet::from_mask(3, 0b100)) found_fixed = true;
    }
    CHECK(found_pair);
    CHECK(found_fixed);
  }
}

TEST_CASE("irreducibility_check") {
  FiniteProbabilitySpace u3 = FiniteProbabilitySpace::uniform(3);

  SUBCASE("3-cycle Koopman operator is irreducible") {
    CHECK(irreducibility_check(koopman_of_map(u3, SemiflowMap{{1, 2, 0}})).irreducible);
  }

  SUBCASE("identity is reducible with a singleton ideal") {
    IrreducibilityReport rep = irreducibility_check(koopman_of_map(u3, SemiflowMap{{0, 1, 2}}));
    CHECK(!rep.irreducible);
    REQUIRE(rep.witness_support.has_value());
    CHECK(rep.witness_support->count() == 1);
  }

  SUBCASE("two 2-cycles are reducible") {
    FiniteProbabilitySpace u4 = FiniteProbabilitySpace::uniform(4);
    IrreducibilityReport rep = irreducibility_check(koopman_of_map(u4, SemiflowMap{{1, 0, 3, 2}}));
    CHECK(!rep.irreducible);
    REQUIRE(rep.witness_support.has_value());
    CHECK(rep.witness_support->count() == 2);
  }
}

TEST_CASE("ergodic iff irreducible, exhaustively over permutations n <= 5") {
  for (std::size_t n = 1; n <= 5; ++n) {
    FiniteProbabilitySpace u = FiniteProbabilitySpace::uniform(n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      SemiflowMap phi{perm};
      bool ergodic = is_ergodic(phi);
      bool irreducible = irreducibility_check(koopman_of_map(u, phi)).irreducible;
      CHECK(ergodic == irreducible);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("fix_dimension") {
  SUBCASE("t = 0 fixes every mode") {
    RotationFlow flow = rotation_model({kSqrt2}, 4);
    CHECK(fix_dimension(flow.model, 0.0).dimension == 9);
  }

  SUBCASE("rational rotation at integer time fixes everything") {
    RotationFlow flow = rotation_model({1.0}, 2);
    CHECK(fix_dimension(flow.model, 1.0).dimension == 5);
    CHECK(fix_dimension(flow.model, Rational(1, 1)).dimension == 5);
  }

  SUBCASE("irrational rotation at t = 1 fixes only the constants") {
    RotationFlow flow = rotation_model({kSqrt2}, 32);
    FixReport rep = fix_dimension(flow.model, 1.0);
    CHECK(rep.dimension == 1);
    CHECK(rep.approximate);
    REQUIRE(rep.modes.size() == 1);
    CHECK(rep.modes[0] == std::vector<int>{0});
  }
}

TEST_CASE("boundary_group_check") {
  SUBCASE("rotation spectrum is a group within the window") {
    RotationFlow flow = rotation_model({kSqrt2}, 6);
    CHECK(boundary_group_check(flow.model, flow.generator).pass);
  }

  SUBCASE("k^2 spectrum fails additive closure at (1, 1)") {
    RotationFlow flow = rotation_model({1.0}, 4);
    DiagonalGenerator g;
    g.eigenvalues.resize(flow.model.mode_count());
    for (std::size_t i = 0; i < flow.model.mode_count(); ++i) {
      int k = flow.model.modes().unrank(i)[0];
      g.eigenvalues[i] = cx(0.0, static_cast<double>(k) * k);
    }
    BoundaryGroupReport rep = boundary_group_check(flow.model, g);
    CHECK(!rep.pass);
    CHECK(rep.failed_check == "addition");
    CHECK(rep.k == std::vector<int>{1});
    CHECK(rep.l == std::vector<int>{1});
  }

  SUBCASE("all-zero spectrum passes") {
    RotationFlow flow = rotation_model({0.0}, 3);
    CHECK(boundary_group_check(flow.model, flow.generator).pass);
  }
}

TEST_CASE("nonergodic_times on the sqrt(2) rotation") {
  RotationFlow flow = rotation_model({kSqrt2}, 4);
  SpectralReport rep = nonergodic_times(flow.model, 3.0);

  CHECK(rep.approximate);
  CHECK(rep.flow_fix_dimension == 1);
  CHECK(rep.flow_ergodic_within_truncation);
  CHECK(!rep.times.empty());

  // smallest time is 1/(4 sqrt(2))
  CHECK(rep.times.front().t == doctest::Approx(1.0 / (4.0 * kSqrt2)).epsilon(1e-14));
  CHECK(rep.times.front().mode == std::vector<int>{4});

  for (std::size_t i = 0; i + 1 < rep.times.size(); ++i)
    CHECK(rep.times[i].t < rep.times[i + 1].t);
  for (const auto& nt : rep.times) {
    CHECK(nt.fix_dim >= 2);
    CHECK(nt.t <= 3.0 + 1e-12);
    CHECK(nt.t > 0.0);
  }

  // boundary spectrum bookkeeping: 0 present, closed under negation
  bool has_zero = false;
  for (double l : rep.boundary_lambdas) {
    if (l == 0.0) has_zero = true;
    bool negated = false;
    for (double m : rep.boundary_lambdas)
      if (std::abs(m + l) < 1e-12) negated = true;
    CHECK(negated);
  }
  CHECK(has_zero);
}

TEST_CASE("nonergodic_times flags the trivial flow") {
  RotationFlow flow = rotation_model({0.0}, 3);
  SpectralReport rep = nonergodic_times(flow.model, 2.0);
  CHECK(rep.flow_fix_dimension == flow.model.mode_count());
  CHECK(!rep.flow_ergodic_within_truncation);
  CHECK(rep.times.empty());  // every t is non-ergodic; no isolated times
}

TEST_CASE("nonergodic_times is exact for rational frequencies") {
  RotationFlow flow = rotation_model({1.0}, 3);
  SpectralReport rep = nonergodic_times(flow.model, 2.0);
  CHECK(!rep.approximate);

  // t = m/k for k <= 3, m <= 2k, deduplicated
  std::vector<Rational> expect{{1, 3}, {1, 2}, {2, 3}, {1, 1}, {4, 3}, {3, 2}, {5, 3}, {2, 1}};
  REQUIRE(rep.times.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    REQUIRE(rep.times[i].exact.has_value());
    CHECK(*rep.times[i].exact == expect[i]);
  }
  // integer times fix the whole window
  CHECK(rep.times[3].fix_dim == 7);
  // t = 1/2 fixes modes 0, +-2 exactly
  CHECK(rep.times[1].fix_dim == 3);
}

TEST_CASE("spectral enumeration against brute-force scanning") {
  RotationFlow flow = rotation_model({kSqrt2}, 8);
  double t_max = 3.0;
  SpectralReport rep = nonergodic_times(flow.model, t_max);

  SplitMix64 rng(1234);
  int tested = 0;
  while (tested < 1000) {
    double t = rng.next_range(1e-6, t_max);
    bool near_listed = false;
    for (const auto& nt : rep.times)
      if (std::abs(nt.t - t) < 1e-6) near_listed = true;
    if (near_listed) continue;
    ++tested;
    CHECK(fix_dimension(flow.model, t).dimension == 1);
  }
}

TEST_CASE("refining the truncation keeps every enumerated time") {
  RotationFlow coarse = rotation_model({kSqrt2}, 8);
  RotationFlow fine = rotation_model({kSqrt2}, 16);
  SpectralReport a = nonergodic_times(coarse.model, 2.0);
  SpectralReport b = nonergodic_times(fine.model, 2.0);
  CHECK(b.times.size() > a.times.size());
  for (const auto& nt : a.times) {
    bool found = false;
    for (const auto& mt : b.times)
      if (std::abs(mt.t - nt.t) <= 1e-12) {
        found = true;
        CHECK(mt.fix_dim >= nt.fix_dim);  // more modes can only add fixed vectors
      }
    CHECK(found);
  }
}

TEST_CASE("fourier modes with distinct eigenvalues are orthogonal") {
  RotationFlow flow = rotation_model({kSqrt2}, 5);
  for (std::size_t i = 0; i < flow.model.mode_count(); ++i)
    for (std::size_t j = i + 1; j < flow.model.mode_count(); ++j) {
      if (std::abs(flow.model.lambda(i) - flow.model.lambda(j)) < 1e-12) continue;
      FourierFunction ei = FourierFunction::zero(flow.model);
      FourierFunction ej = FourierFunction::zero(flow.model);
      ei.coefficients[i] = 1.0;
      ej.coefficients[j] = 1.0;
      CHECK(std::abs(fourier_inner(ei, ej)) == 0.0);
    }
}

TEST_CASE("product_torus_demo") {
  SUBCASE("(1, sqrt 2): ergodic flow, strictly larger non-ergodic set") {
    ProductTorusReport rep = product_torus_demo(std::vector<double>{1.0, kSqrt2}, 2, 3.0);
    CHECK(rep.flow_fix_dimension == 1);
    CHECK(rep.integer_relations.empty());
    CHECK(rep.factors_contained);
    CHECK(rep.strictly_larger);

    // the mixed mode (1,1) contributes 1/(1+sqrt 2), in neither factor list
    bool found = false;
    for (const auto& nt : rep.product_report.times)
      if (std::abs(nt.t - 1.0 / (1.0 + kSqrt2)) < 1e-12) found = true;
    CHECK(found);
  }

  SUBCASE("(1, 2): rationally dependent, relation (2, -1) found") {
    ProductTorusReport rep = product_torus_demo(std::vector<double>{1.0, 2.0}, 2, 2.0);
    CHECK(rep.flow_fix_dimension >= 2);
    REQUIRE(!rep.integer_relations.empty());
    CHECK(rep.integer_relations.front() == std::vector<int>{2, -1});
    CHECK(!rep.product_report.flow_ergodic_within_truncation);
  }

  SUBCASE("single frequency degenerates to nonergodic_times") {
    ProductTorusReport rep = product_torus_demo(std::vector<double>{kSqrt2}, 4, 3.0);
    RotationFlow flow = rotation_model({kSqrt2}, 4);
    SpectralReport direct = nonergodic_times(flow.model, 3.0);
    REQUIRE(rep.product_report.times.size() == direct.times.size());
    for (std::size_t i = 0; i < direct.times.size(); ++i)
      CHECK(rep.product_report.times[i].t == direct.times[i].t);
  }
}
