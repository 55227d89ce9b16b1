#ifndef KOOPMAN_ERGODICITY_HPP
#define KOOPMAN_ERGODICITY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "koopman/markov_operators.hpp"
#include "koopman/rational.hpp"
#include "koopman/spectral_flow.hpp"

namespace koopman {

// All sets with phi^{-1}(M) = M. Such sets are exactly the unions of orbit
// components (x and phi(x) always fall together), so the enumeration walks
// the component masks. Ergodic means only the trivial pair survives.
inline std::vector<MeasureAlgebraSet> invariant_sets(const SemiflowMap& phi) {
  const std::size_t n = phi.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t x = 0; x < n; ++x) {
    std::size_t a = find(x), b = find(phi(x));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<std::size_t> roots;
  std::vector<std::size_t> comp(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::size_t r = find(x);
    auto it = std::find(roots.begin(), roots.end(), r);
    if (it == roots.end()) {
      comp[x] = roots.size();
      roots.push_back(r);
    } else {
      comp[x] = static_cast<std::size_t>(it - roots.begin());
    }
  }

  std::size_t c = roots.size();
  if (c > 20) throw Error(errc::budget_exceeded, "too many components to enumerate");
  std::vector<MeasureAlgebraSet> out;
  for (std::uint64_t mask = 0; mask < (1ull << c); ++mask) {
    MeasureAlgebraSet m = MeasureAlgebraSet::empty(n);
    for (std::size_t x = 0; x < n; ++x) m.member[x] = (mask >> comp[x]) & 1u;
    out.push_back(std::move(m));
  }
  return out;
}

inline bool is_ergodic(const SemiflowMap& phi) { return invariant_sets(phi).size() == 2; }

struct IrreducibilityReport {
  bool irreducible = true;
  // support of a nontrivial invariant closed ideal when reducible
  std::optional<MeasureAlgebraSet> witness_support;
};

// Closed ideals of functions on a finite atomic space are the supports
// I_S = { f : f = 0 outside S }. I_S is T-invariant exactly when no row
// outside S touches a column in S, so irreducibility is strong connectivity
// of the support graph (edge x -> y when matrix[x][y] != 0).
inline IrreducibilityReport irreducibility_check(const MarkovOperator& t, double tol = 1e-9) {
  const std::size_t n = t.dim();
  std::vector<std::vector<std::size_t>> reverse_adj(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (std::abs(t.matrix(x, y)) > tol) reverse_adj[y].push_back(x);

  IrreducibilityReport rep;
  for (std::size_t v = 0; v < n; ++v) {
    // ancestors of v: everything that reaches v through the support graph
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{v};
    seen[v] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      std::size_t y = stack.back();
      stack.pop_back();
      for (std::size_t x : reverse_adj[y])
        if (!seen[x]) {
          seen[x] = true;
          ++count;
          stack.push_back(x);
        }
    }
    if (count < n) {
      rep.irreducible = false;
      rep.witness_support = MeasureAlgebraSet{seen};
      return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// boundary point spectrum and non-ergodic times of rotation models
// ---------------------------------------------------------------------------

struct FixReport {
  std::size_t dimension = 0;
  std::vector<std::vector<int>> modes;  // modes with lambda_k t in 2 pi Z
  bool approximate = false;
};

// dim fix(T(t)) by the point-spectrum mapping: modes with (k.alpha) t in Z.
// Float verdicts use |sin(pi (k.alpha) t)| < tol and are flagged approximate.
inline FixReport fix_dimension(const SpectralFlowModel& model, double t, double tol = 1e-9) {
  if (t < 0.0) throw Error(errc::invalid_argument, "t must be nonnegative");
  FixReport rep;
  rep.approximate = t != 0.0;
  for (std::size_t i = 0; i < model.mode_count(); ++i) {
    double phase = model.lambda(i) * t / 2.0;  // pi (k.alpha) t
    if (std::abs(std::sin(phase)) < tol) {
      ++rep.dimension;
      rep.modes.push_back(model.modes().unrank(i));
    }
  }
  return rep;
}

// Exact verdict for rational data; requires every frequency to carry an
// exact rational form.
inline FixReport fix_dimension(const SpectralFlowModel& model, const Rational& t) {
  if (!model.all_rational())
    throw Error(errc::invalid_argument, "exact fix_dimension needs rational frequencies");
  FixReport rep;
  rep.approximate = false;
  for (std::size_t i = 0; i < model.mode_count(); ++i) {
    std::vector<int> k = model.modes().unrank(i);
    Rational r = *model.dot_alpha_exact(k) * t;
    if (r.is_integer()) {
      ++rep.dimension;
      rep.modes.push_back(std::move(k));
    }
  }
  return rep;
}

struct BoundaryGroupReport {
  bool pass = true;
  std::string failed_check;  // "addition" or "negation"
  std::vector<int> k, l;
  double deviation = 0.0;
};

namespace detail {

inline bool eigenvalue_in_set(const std::vector<std::pair<double, double>>& sorted_set, cx v,
                              double tol) {
  auto lo = std::lower_bound(sorted_set.begin(), sorted_set.end(),
                             std::make_pair(v.real() - tol, -std::numeric_limits<double>::infinity()));
  for (auto it = lo; it != sorted_set.end() && it->first <= v.real() + tol; ++it)
    if (std::abs(cx(it->first, it->second) - v) <= tol) return true;
  return false;
}

}  // namespace detail

// Group structure of the truncated boundary spectrum: the eigenvalue set must
// be closed under negation, and under addition for mode pairs whose sum stays
// inside the truncation window.
inline BoundaryGroupReport boundary_group_check(const SpectralFlowModel& model,
                                                const DiagonalGenerator& gen, double tol = 1e-9) {
  const auto& lat = model.modes();
  if (gen.eigenvalues.size() != lat.size())
    throw Error(errc::dimension_mismatch, "generator vs lattice");

  std::vector<std::pair<double, double>> values;
  values.reserve(lat.size());
  for (const auto& ev : gen.eigenvalues) values.emplace_back(ev.real(), ev.imag());
  std::sort(values.begin(), values.end());

  BoundaryGroupReport rep;
  std::vector<std::size_t> order = detail::modes_by_size(lat);
  std::vector<int> sum(lat.dims());
  for (std::size_t a = 0; a < order.size(); ++a) {
    std::vector<int> ki = lat.unrank(order[a]);
    for (std::size_t b = a; b < order.size(); ++b) {
      std::vector<int> kj = lat.unrank(order[b]);
      for (std::size_t d = 0; d < lat.dims(); ++d) sum[d] = ki[d] + kj[d];
      if (!lat.rank(sum)) continue;
      cx v = gen.eigenvalues[order[a]] + gen.eigenvalues[order[b]];
      if (!detail::eigenvalue_in_set(values, v, tol)) {
        rep.pass = false;
        rep.failed_check = "addition";
        rep.k = ki;
        rep.l = kj;
        return rep;
      }
    }
  }
  for (std::size_t i : order) {
    if (!detail::eigenvalue_in_set(values, -gen.eigenvalues[i], tol)) {
      rep.pass = false;
      rep.failed_check = "negation";
      rep.k = lat.unrank(i);
      rep.l = rep.k;
      return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// enumeration of non-ergodic times
// ---------------------------------------------------------------------------

struct NonergodicTime {
  double t = 0.0;
  std::optional<Rational> exact;
  std::size_t fix_dim = 0;
  std::vector<int> mode;  // responsible mode, canonical sign, minimal |k|_1
};

struct SpectralReport {
  std::vector<double> boundary_lambdas;        // sorted distinct lambda values (the set G)
  std::vector<NonergodicTime> times;           // sorted, deduplicated, in (0, t_max]
  std::size_t flow_fix_dimension = 0;          // modes fixed at every t
  bool flow_ergodic_within_truncation = true;
  std::vector<std::vector<int>> zero_modes;    // k != 0 with k.alpha = 0 (canonical sign)
  bool approximate = false;                    // float path used
  double t_max = 0.0;
};

namespace detail {

inline std::vector<int> canonical_mode(std::vector<int> k) {
  for (int c : k) {
    if (c > 0) break;
    if (c < 0) {
      for (auto& x : k) x = -x;
      break;
    }
  }
  return k;
}

inline int mode_l1(std::span<const int> k) {
  int s = 0;
  for (int c : k) s += std::abs(c);
  return s;
}

// smallest |k|_1 first, lexicographic tie-break; modes arrive canonicalized
inline bool mode_less(std::span<const int> a, std::span<const int> b) {
  int la = mode_l1(a), lb = mode_l1(b);
  if (la != lb) return la < lb;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

// Closed-form enumeration of { t in (0, t_max] : some mode k != 0 has
// lambda_k t in 2 pi Z }, i.e. t = m / (k.alpha). Exact rational arithmetic
// when every frequency is rational; otherwise floats with merge tolerance
// 1e-12 and an approximate flag. Each time carries dim fix(T(t)) and the
// responsible mode.
inline SpectralReport nonergodic_times(const SpectralFlowModel& model, double t_max,
                                       std::int64_t max_denominator = 1'000'000) {
  if (!(t_max > 0.0)) throw Error(errc::invalid_argument, "t_max must be positive");
  const auto& lat = model.modes();
  const bool exact = model.all_rational();

  SpectralReport rep;
  rep.t_max = t_max;
  rep.approximate = !exact;

  // boundary spectrum (distinct lambda values)
  {
    std::vector<double> ls(model.lambdas().begin(), model.lambdas().end());
    std::sort(ls.begin(), ls.end());
    for (double l : ls)
      if (rep.boundary_lambdas.empty() || std::abs(l - rep.boundary_lambdas.back()) > 1e-12)
        rep.boundary_lambdas.push_back(l);
  }

  // modes fixed at every t, and the finite times of the rest
  struct Candidate {
    double t;
    std::optional<Rational> exact_t;
    std::vector<int> mode;
  };
  std::vector<Candidate> raw;

  std::size_t zero_idx = lat.zero_index();
  rep.flow_fix_dimension = 0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    std::vector<int> k = lat.unrank(i);
    bool is_zero_mode = false;
    std::optional<Rational> a_exact;
    double a = std::abs(model.dot_alpha(k));
    if (exact) {
      a_exact = *model.dot_alpha_exact(k);
      if (a_exact->is_zero()) is_zero_mode = true;
    } else if (a <= 1e-9) {
      is_zero_mode = true;
    }

    if (is_zero_mode) {
      ++rep.flow_fix_dimension;
      if (i != zero_idx) {
        std::vector<int> canon = detail::canonical_mode(k);
        if (std::find(rep.zero_modes.begin(), rep.zero_modes.end(), canon) ==
            rep.zero_modes.end())
          rep.zero_modes.push_back(canon);
      }
      continue;
    }

    double bound = t_max * a * (1.0 + 1e-12) + 1e-9;
    if (bound > 1e7) throw Error(errc::budget_exceeded, "too many candidate times");
    std::int64_t m_max = std::min(static_cast<std::int64_t>(bound), max_denominator);
    for (std::int64_t m = 1; m <= m_max; ++m) {
      Candidate c;
      if (exact) {
        Rational abs_a = *a_exact < Rational(0, 1) ? -*a_exact : *a_exact;
        c.exact_t = Rational::integer(m) / abs_a;
        c.t = c.exact_t->to_double();
      } else {
        c.t = static_cast<double>(m) / a;
      }
      if (c.t > t_max * (1.0 + 1e-12)) continue;
      c.mode = detail::canonical_mode(k);
      raw.push_back(std::move(c));
    }
  }

  rep.flow_ergodic_within_truncation = rep.flow_fix_dimension <= 1;

  std::sort(rep.zero_modes.begin(), rep.zero_modes.end(),
            [](const auto& a, const auto& b) { return detail::mode_less(a, b); });

  std::sort(raw.begin(), raw.end(), [](const Candidate& a, const Candidate& b) {
    if (a.t != b.t) return a.t < b.t;
    return detail::mode_less(a.mode, b.mode);
  });

  for (std::size_t i = 0; i < raw.size(); ++i) {
    bool same = false;
    if (!rep.times.empty()) {
      if (raw[i].exact_t && rep.times.back().exact)
        same = *raw[i].exact_t == *rep.times.back().exact;
      else
        same = std::abs(raw[i].t - rep.times.back().t) <= 1e-12 * std::max(1.0, raw[i].t);
    }
    if (same) {
      if (detail::mode_less(raw[i].mode, rep.times.back().mode))
        rep.times.back().mode = raw[i].mode;
      continue;
    }
    NonergodicTime nt;
    nt.t = raw[i].t;
    nt.exact = raw[i].exact_t;
    nt.mode = raw[i].mode;
    FixReport fix = raw[i].exact_t ? fix_dimension(model, *raw[i].exact_t)
                                   : fix_dimension(model, raw[i].t);
    nt.fix_dim = fix.dimension;
    rep.times.push_back(std::move(nt));
  }

  // report invariants: 0 in G, G closed under negation, listed dims >= 2
  bool zero_in = false;
  for (double l : rep.boundary_lambdas) {
    if (l == 0.0) zero_in = true;
    bool negated = false;
    for (double m : rep.boundary_lambdas)
      if (std::abs(m + l) <= 1e-12) negated = true;
    if (!negated)
      throw Error(errc::internal_inconsistency, "boundary spectrum not negation-closed");
  }
  if (!zero_in) throw Error(errc::internal_inconsistency, "boundary spectrum misses 0");
  for (const auto& nt : rep.times)
    if (nt.fix_dim < 2)
      throw Error(errc::internal_inconsistency, "listed time with fix dimension < 2");

  return rep;
}

// ---------------------------------------------------------------------------
// product rotation demo (finite-d face of the infinite-torus example)
// ---------------------------------------------------------------------------

struct ProductTorusReport {
  std::vector<SpectralReport> factor_reports;
  SpectralReport product_report;
  std::size_t flow_fix_dimension = 0;
  std::vector<std::vector<int>> integer_relations;  // zero modes of the product
  bool factors_contained = false;   // each factor's times appear in the product list
  bool strictly_larger = false;     // product has times outside every factor list
};

inline ProductTorusReport product_torus_demo(std::span<const double> frequencies, int truncation,
                                             double t_max) {
  if (frequencies.empty()) throw Error(errc::invalid_argument, "need at least one frequency");
  std::vector<RotationFlow> factors;
  for (double a : frequencies) factors.push_back(rotation_model(std::span<const double>(&a, 1), truncation));
  RotationFlow product = product_flow(factors);

  ProductTorusReport rep;
  for (const auto& f : factors) rep.factor_reports.push_back(nonergodic_times(f.model, t_max));
  rep.product_report = nonergodic_times(product.model, t_max);
  rep.flow_fix_dimension = rep.product_report.flow_fix_dimension;
  rep.integer_relations = rep.product_report.zero_modes;

  auto contains_time = [&](const SpectralReport& r, double t) {
    for (const auto& nt : r.times)
      if (std::abs(nt.t - t) <= 1e-12 * std::max(1.0, t)) return true;
    return false;
  };

  rep.factors_contained = true;
  for (const auto& fr : rep.factor_reports)
    for (const auto& nt : fr.times)
      if (!contains_time(rep.product_report, nt.t)) rep.factors_contained = false;

  for (const auto& nt : rep.product_report.times) {
    bool in_some_factor = false;
    for (const auto& fr : rep.factor_reports)
      if (contains_time(fr, nt.t)) in_some_factor = true;
    if (!in_some_factor) {
      rep.strictly_larger = true;
      break;
    }
  }
  return rep;
}

}  // namespace koopman

#endif
