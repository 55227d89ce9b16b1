#ifndef KOOPMAN_SEMIGROUP_ENGINE_HPP
#define KOOPMAN_SEMIGROUP_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koopman/markov_operators.hpp"
#include "koopman/matrix.hpp"
#include "koopman/measure_space.hpp"
#include "koopman/rng.hpp"

namespace koopman {

// Bounded generator on a finite space; D(A) is everything.
struct GeneratorMatrix {
  ComplexMatrix matrix;
  FiniteProbabilitySpace space;

  std::size_t dim() const { return matrix.dim(); }
};

inline ComplexMatrix evolution_operator(const GeneratorMatrix& a, double t) {
  if (t < 0.0) throw Error(errc::invalid_argument, "t must be nonnegative");
  return expm(a.matrix * cx(t, 0.0));
}

// e^{tA} f
inline MeasurableFunction expm_evolve(const GeneratorMatrix& a, double t, const MeasurableFunction& f) {
  check_dims(a.space, f);
  if (t == 0.0) return f;
  return MeasurableFunction(evolution_operator(a, t).apply(f.values));
}

// ---------------------------------------------------------------------------
// generator classifiers
// ---------------------------------------------------------------------------

struct DerivationReport {
  bool pass = true;
  double deviation = 0.0;
  // failed check: "leibniz" with the indicator pair (i,j), "reality" with i, or "unit"
  std::string failed_check;
  std::size_t i = 0, j = 0;
  std::optional<std::pair<MeasurableFunction, MeasurableFunction>> witness;
};

// A1 = 0, the Leibniz rule on all pairs of atom indicators (a basis;
// bilinearity extends the identity), and reality A conj(f) = conj(A f) on the
// real basis.
inline DerivationReport derivation_check(const GeneratorMatrix& a, double tol = 1e-9) {
  const std::size_t n = a.dim();
  DerivationReport rep;

  auto record = [&](const std::string& check, std::size_t i, std::size_t j, double dev,
                    MeasurableFunction f, MeasurableFunction g) {
    rep.pass = false;
    rep.deviation = dev;
    rep.failed_check = check;
    rep.i = i;
    rep.j = j;
    rep.witness = std::make_pair(std::move(f), std::move(g));
  };

  {
    MeasurableFunction one = MeasurableFunction::one(n);
    MeasurableFunction aone(a.matrix.apply(one.values));
    double dev = 0.0;
    for (std::size_t x = 0; x < n; ++x) dev = std::max(dev, std::abs(aone[x]));
    if (dev > tol) record("unit", 0, 0, dev, one, one);
  }

  for (std::size_t i = 0; i < n && rep.pass; ++i) {
    MeasurableFunction ei(n);
    ei[i] = 1.0;
    MeasurableFunction aei(a.matrix.apply(ei.values));
    for (std::size_t j = 0; j < n; ++j) {
      MeasurableFunction ej(n);
      ej[j] = 1.0;
      MeasurableFunction lhs(a.matrix.apply(pointwise_product(ei, ej).values));
      MeasurableFunction aej(a.matrix.apply(ej.values));
      MeasurableFunction rhs = pointwise_product(aei, ej);
      MeasurableFunction cross = pointwise_product(ei, aej);
      double dev = 0.0;
      for (std::size_t x = 0; x < n; ++x)
        dev = std::max(dev, std::abs(lhs[x] - rhs[x] - cross[x]));
      if (dev > tol) {
        record("leibniz", i, j, dev, ei, ej);
        break;
      }
    }
  }

  if (rep.pass) {
    for (std::size_t i = 0; i < n; ++i) {
      MeasurableFunction ei(n);
      ei[i] = 1.0;
      MeasurableFunction aei(a.matrix.apply(ei.values));
      double dev = 0.0;
      for (std::size_t x = 0; x < n; ++x) dev = std::max(dev, std::abs(aei[x].imag()));
      if (dev > tol) {
        record("reality", i, i, dev, ei, ei);
        break;
      }
    }
  }

  return rep;
}

// A'mu = 0: weighted column sums vanish.
inline bool adjoint_measure_check(const GeneratorMatrix& a, double tol = 1e-9,
                                  double* max_deviation = nullptr,
                                  std::size_t* witness_col = nullptr) {
  const std::size_t n = a.dim();
  double worst = 0.0;
  std::size_t worst_col = 0;
  for (std::size_t c = 0; c < n; ++c) {
    cx s(0.0, 0.0);
    for (std::size_t r = 0; r < n; ++r) s += a.space.weight(r) * a.matrix(r, c);
    double dev = std::abs(s);
    if (dev > worst) {
      worst = dev;
      worst_col = c;
    }
  }
  if (max_deviation) *max_deviation = worst;
  if (witness_col) *witness_col = worst_col;
  return worst <= tol;
}

struct KatoReport {
  bool pass = true;
  double deviation = 0.0;
  std::optional<MeasurableFunction> witness;
  std::size_t patterns_tested = 0;
  std::size_t randoms_tested = 0;
};

namespace detail {

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double kato_deviation(const GeneratorMatrix& a, const MeasurableFunction& f) {
  MeasurableFunction lhs(a.matrix.apply(abs_value(f).values));
  MeasurableFunction af(a.matrix.apply(f.values));
  double dev = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x)
    dev = std::max(dev, std::abs(lhs[x] - sign_of(f[x].real()) * af[x]));
  return dev;
}

}  // namespace detail

// Kato equality A|f| = sign(f) Af on real f: every +-1 sign pattern when
// n <= 10, then random nowhere-zero real functions. sign(0) = 0, but the
// sampled functions never vanish.
inline KatoReport kato_check(const GeneratorMatrix& a, int samples = 64, double tol = 1e-9) {
  if (samples < 1) throw Error(errc::invalid_argument, "samples must be >= 1");
  const std::size_t n = a.dim();
  KatoReport rep;

  if (n <= 10) {
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      MeasurableFunction f(n);
      for (std::size_t i = 0; i < n; ++i) f[i] = ((mask >> i) & 1u) ? -1.0 : 1.0;
      ++rep.patterns_tested;
      double dev = detail::kato_deviation(a, f);
      if (dev > tol) {
        rep.pass = false;
        rep.deviation = dev;
        rep.witness = f;
        return rep;
      }
    }
  }

  SplitMix64 rng(0x4B41544FULL);
  for (int s = 0; s < samples; ++s) {
    MeasurableFunction f(n);
    for (std::size_t i = 0; i < n; ++i) {
      double mag = 0.1 + rng.next_double();
      f[i] = rng.next_double() < 0.5 ? -mag : mag;
    }
    ++rep.randoms_tested;
    double dev = detail::kato_deviation(a, f);
    if (dev > tol) {
      rep.pass = false;
      rep.deviation = dev;
      rep.witness = f;
      return rep;
    }
  }
  return rep;
}

// Decomposition A = delta + q with q = A1 and delta = A - diag(q), bundled
// with the three generator-level checks.
struct GeneratorVerdict {
  MeasurableFunction q;
  GeneratorMatrix delta;
  DerivationReport derivation;   // of delta
  bool fixes_measure = false;    // A'mu = 0
  double measure_deviation = 0.0;
  std::size_t measure_witness_col = 0;
  KatoReport kato;               // of A

  bool markov_generator() const {
    return derivation.pass && fixes_measure && q_is_zero;
  }
  bool q_is_zero = false;
};

inline GeneratorVerdict classify_generator(const GeneratorMatrix& a, double tol = 1e-9,
                                           int kato_samples = 64) {
  const std::size_t n = a.dim();
  MeasurableFunction q(a.matrix.apply(MeasurableFunction::one(n).values));

  ComplexMatrix delta_m = a.matrix;
  for (std::size_t i = 0; i < n; ++i) delta_m(i, i) -= q[i];
  GeneratorMatrix delta{std::move(delta_m), a.space};

  DerivationReport derivation = derivation_check(delta, tol);
  double measure_dev = 0.0;
  std::size_t measure_col = 0;
  bool fixes = adjoint_measure_check(a, tol, &measure_dev, &measure_col);
  KatoReport kato = kato_check(a, kato_samples, tol);

  bool q_zero = true;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(q[i]) > tol) q_zero = false;

  return GeneratorVerdict{std::move(q),  std::move(delta), std::move(derivation), fixes,
                          measure_dev,   measure_col,      std::move(kato),       q_zero};
}

// ---------------------------------------------------------------------------
// quadrature and semigroup averages
// ---------------------------------------------------------------------------

namespace detail {

inline void axpy(std::vector<cx>& y, double alpha, std::span<const cx> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace detail

// Composite Simpson over [a, b] with `panels` panels (2*panels + 1 nodes) of
// a vector-valued integrand.
template <class Eval>
std::vector<cx> simpson_vector(Eval&& eval, double a, double b, int panels) {
  if (panels < 1) throw Error(errc::invalid_argument, "panels must be >= 1");
  double h = (b - a) / panels;
  std::vector<cx> acc;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    std::vector<cx> f0 = eval(lo);
    std::vector<cx> fm = eval(lo + 0.5 * h);
    std::vector<cx> f1 = eval(lo + h);
    if (acc.empty()) acc.assign(f0.size(), cx(0.0, 0.0));
    detail::axpy(acc, h / 6.0, f0);
    detail::axpy(acc, 4.0 * h / 6.0, fm);
    detail::axpy(acc, h / 6.0, f1);
  }
  return acc;
}

// (1/t) int_0^t T(r) f dr. T_of(s, f) must evaluate the semigroup at s.
template <class Evolver>
std::vector<cx> cesaro_average(Evolver&& t_of, double t, std::span<const cx> f, int panels = 256) {
  if (!(t > 0.0)) throw Error(errc::invalid_argument, "cesaro_average needs t > 0");
  std::vector<cx> integral =
      simpson_vector([&](double s) { return t_of(s, f); }, 0.0, t, panels);
  for (auto& v : integral) v *= 1.0 / t;
  return integral;
}

struct ContinuityBoundReport {
  bool pass = true;
  double max_slack_violation = 0.0;  // max over the grid of lhs - (2 s |f|_inf + tol)
  double worst_s = 0.0;
  std::vector<double> lhs_values;
};

// Verifies | T(s) F_t - F_t |_inf <= 2 s |f|_inf + tol with
// F_t = int_0^t T(r) f dr, the bound used to place Cesaro averages in the
// sup-norm-continuity algebra.
template <class Evolver, class SupNorm>
ContinuityBoundReport continuity_bound_check(Evolver&& t_of, std::span<const cx> f, double t,
                                             std::span<const double> s_grid, SupNorm&& sup_norm,
                                             int panels = 1024, double tol = 1e-9) {
  std::vector<cx> big_f = simpson_vector([&](double s) { return t_of(s, f); }, 0.0, t, panels);
  double f_inf = sup_norm(f);
  ContinuityBoundReport rep;
  rep.lhs_values.reserve(s_grid.size());
  for (double s : s_grid) {
    if (s < 0.0 || s > t) throw Error(errc::invalid_argument, "s outside [0, t]");
    std::vector<cx> shifted = t_of(s, big_f);
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= big_f[i];
    double lhs = sup_norm(shifted);
    rep.lhs_values.push_back(lhs);
    double violation = lhs - (2.0 * s * f_inf + tol);
    if (violation > rep.max_slack_violation) {
      rep.max_slack_violation = violation;
      rep.worst_s = s;
      rep.pass = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// perturbation formula S(t) f = exp(int_0^t T(s) q ds) T(t) f
// ---------------------------------------------------------------------------

struct PerturbationSpec {
  GeneratorMatrix delta;    // derivation part
  MeasurableFunction q;     // q = A1
};

// Evaluates the closed perturbation formula. T(s) q is stepped through the
// Simpson nodes with a single half-panel propagator; T(t) f uses one direct
// exponential.
inline MeasurableFunction perturbed_evolve(const PerturbationSpec& spec, double t,
                                           const MeasurableFunction& f, int quad_steps = 256) {
  if (t < 0.0) throw Error(errc::invalid_argument, "t must be nonnegative");
  if (quad_steps < 1) throw Error(errc::invalid_argument, "quad_steps must be >= 1");
  check_dims(spec.delta.space, f);
  if (spec.q.size() != f.size()) throw Error(errc::dimension_mismatch, "q vs f");
  if (t == 0.0) return f;

  const std::size_t n = f.size();
  double h = t / quad_steps;
  ComplexMatrix half_step = expm(spec.delta.matrix * cx(h / 2.0, 0.0));

  std::vector<cx> node = spec.q.values;  // T(0) q
  std::vector<cx> integral(n, cx(0.0, 0.0));
  for (int p = 0; p < quad_steps; ++p) {
    detail::axpy(integral, h / 6.0, node);
    node = half_step.apply(node);
    detail::axpy(integral, 4.0 * h / 6.0, node);
    node = half_step.apply(node);
    detail::axpy(integral, h / 6.0, node);
  }

  std::vector<cx> evolved = evolution_operator(spec.delta, t).apply(f.values);
  MeasurableFunction out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(integral[i]) * evolved[i];
  return out;
}

struct PerturbationReport {
  double max_residual = 0.0;
  std::vector<std::pair<double, double>> per_t;  // (t, residual)
  bool pass = true;
};

// Independent route: the perturbed semigroup is also e^{t(delta + diag q)}.
// Compares the closed formula against that exponential in the L^1(mu) norm.
inline PerturbationReport verify_perturbation(const PerturbationSpec& spec,
                                              std::span<const double> t_grid,
                                              const MeasurableFunction& f, double tol = 1e-6,
                                              int quad_steps = 256) {
  const std::size_t n = spec.delta.dim();
  ComplexMatrix full = spec.delta.matrix;
  for (std::size_t i = 0; i < n; ++i) full(i, i) += spec.q[i];
  GeneratorMatrix full_gen{std::move(full), spec.delta.space};

  PerturbationReport rep;
  for (double t : t_grid) {
    MeasurableFunction lhs = perturbed_evolve(spec, t, f, quad_steps);
    MeasurableFunction rhs = expm_evolve(full_gen, t, f);
    MeasurableFunction diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = lhs[i] - rhs[i];
    double res = lp_norm(spec.delta.space, diff, 1.0);
    rep.per_t.emplace_back(t, res);
    rep.max_residual = std::max(rep.max_residual, res);
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

}  // namespace koopman

#endif
