#ifndef KOOPMAN_TOPOLOGICAL_MODEL_HPP
#define KOOPMAN_TOPOLOGICAL_MODEL_HPP

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "koopman/markov_operators.hpp"
#include "koopman/semigroup_engine.hpp"

namespace koopman {

// Finite-scale compact model (K, psi, nu) of a Markov lattice operator plus
// the algebra isomorphism Phi between functions on the atoms and functions
// on K. At finite scale K is the atom set (the Gelfand spectrum of the full
// function algebra) and Phi is the identity on coordinates; hand-built
// models in tests may carry other data.
struct TopologicalModel {
  std::vector<std::string> k_points;
  SemiflowMap psi;
  std::vector<double> nu;
  ComplexMatrix phi;
};

struct ModelResiduals {
  double unit = 0.0;               // Phi 1 = 1
  double multiplicativity = 0.0;   // Phi(fg) = Phi f . Phi g on basis pairs
  double intertwining = 0.0;       // Phi(Tf) = (Phi f) o psi
  double measure_transport = 0.0;  // int Phi^{-1} g dmu = int g dnu
  double invariance = 0.0;         // nu(psi^{-1} M) = nu(M)

  double max() const {
    return std::max({unit, multiplicativity, intertwining, measure_transport, invariance});
  }
};

namespace detail {

inline MeasurableFunction compose_with_map(const MeasurableFunction& g, const SemiflowMap& psi) {
  MeasurableFunction out(g.size());
  for (std::size_t x = 0; x < g.size(); ++x) out[x] = g[psi(x)];
  return out;
}

}  // namespace detail

// Residuals of the three model identities plus nu-invariance. All paths are
// plain arithmetic on the given data, so models produced by
// build_finite_model come back exactly zero.
inline ModelResiduals verify_model_isomorphism(const TopologicalModel& model,
                                               const MarkovOperator& t) {
  const std::size_t n = t.dim();
  if (model.phi.dim() != n || model.psi.size() != n || model.nu.size() != n)
    throw Error(errc::dimension_mismatch, "model vs operator");
  ModelResiduals res;

  auto phi_apply = [&](const MeasurableFunction& f) {
    return MeasurableFunction(model.phi.apply(f.values));
  };

  MeasurableFunction one = MeasurableFunction::one(n);
  MeasurableFunction phi_one = phi_apply(one);
  for (std::size_t x = 0; x < n; ++x)
    res.unit = std::max(res.unit, std::abs(phi_one[x] - cx(1.0, 0.0)));

  std::vector<MeasurableFunction> basis, phi_basis;
  for (std::size_t i = 0; i < n; ++i) {
    MeasurableFunction e(n);
    e[i] = 1.0;
    phi_basis.push_back(phi_apply(e));
    basis.push_back(std::move(e));
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      MeasurableFunction lhs = phi_apply(pointwise_product(basis[i], basis[j]));
      MeasurableFunction rhs = pointwise_product(phi_basis[i], phi_basis[j]);
      for (std::size_t x = 0; x < n; ++x)
        res.multiplicativity = std::max(res.multiplicativity, std::abs(lhs[x] - rhs[x]));
    }

  for (std::size_t i = 0; i < n; ++i) {
    MeasurableFunction lhs = phi_apply(t.apply(basis[i]));
    MeasurableFunction rhs = detail::compose_with_map(phi_basis[i], model.psi);
    for (std::size_t x = 0; x < n; ++x)
      res.intertwining = std::max(res.intertwining, std::abs(lhs[x] - rhs[x]));
  }

  LuDecomposition phi_lu = lu_factor(model.phi);
  for (std::size_t i = 0; i < n; ++i) {
    MeasurableFunction pre(lu_solve(phi_lu, basis[i].values));
    cx lhs = integral(t.space, pre);
    cx rhs(model.nu[i], 0.0);
    res.measure_transport = std::max(res.measure_transport, std::abs(lhs - rhs));
  }

  std::vector<double> pulled(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) pulled[model.psi(x)] += model.nu[x];
  for (std::size_t y = 0; y < n; ++y)
    res.invariance = std::max(res.invariance, std::abs(pulled[y] - model.nu[y]));

  return res;
}

// Builds the topological model of a Markov lattice operator: K = atoms,
// psi the underlying point map, nu = mu, Phi the coordinate identity. The
// isomorphism identities are verified before returning.
inline TopologicalModel build_finite_model(const FiniteProbabilitySpace& space,
                                           const MarkovOperator& t, double tol = 1e-9) {
  OperatorVerdict v = classify_operator(t, tol);
  if (!v.markov_lattice())
    throw Error(errc::not_markov_lattice, "topological model needs a Markov lattice operator");

  TopologicalModel model;
  model.k_points = space.labels();
  model.psi = map_from_operator(t, tol);
  model.nu = space.weights();
  model.phi = ComplexMatrix::identity(space.size());

  if (verify_model_isomorphism(model, t).max() > tol)
    throw Error(errc::internal_inconsistency, "model invariants failed after construction");
  return model;
}

// ---------------------------------------------------------------------------
// generated separable algebras
// ---------------------------------------------------------------------------

struct GeneratingSystemReport {
  std::vector<MeasurableFunction> generators;        // int_0^{t_n} T(s) 1_{M_k} ds
  std::vector<std::vector<std::size_t>> partition;   // algebra they generate
  bool separates_atoms = false;
};

// Integrates each indicator over each time horizon with the semigroup
// supplied as an evolution procedure, then reports the algebra the family
// generates. At finite scale the algebra is everything exactly when the
// partition separates atoms.
template <class Evolver>
GeneratingSystemReport separable_generating_system(const FiniteProbabilitySpace& space,
                                                   std::span<const MeasureAlgebraSet> sets,
                                                   std::span<const double> times,
                                                   Evolver&& t_of, int quad_steps = 64,
                                                   double cell_tol = 1e-9) {
  GeneratingSystemReport rep;
  for (const auto& m : sets) {
    MeasurableFunction ind = indicator(space, m);
    for (double horizon : times) {
      if (horizon < 0.0) throw Error(errc::invalid_argument, "negative time horizon");
      if (horizon == 0.0) {
        rep.generators.push_back(MeasurableFunction(space.size()));
        continue;
      }
      std::vector<cx> integral = simpson_vector(
          [&](double s) { return t_of(s, std::span<const cx>(ind.values)); }, 0.0, horizon,
          quad_steps);
      rep.generators.push_back(MeasurableFunction(std::move(integral)));
    }
  }
  rep.partition = generated_partition(space, rep.generators, cell_tol);
  rep.separates_atoms = rep.partition.size() == space.size();
  return rep;
}

}  // namespace koopman

#endif
