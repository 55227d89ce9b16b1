#ifndef KOOPMAN_MARKOV_OPERATORS_HPP
#define KOOPMAN_MARKOV_OPERATORS_HPP

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "koopman/matrix.hpp"
#include "koopman/measure_space.hpp"
#include "koopman/rng.hpp"

namespace koopman {

// Self-map of the atoms; candidate semiflow time step.
struct SemiflowMap {
  std::vector<std::size_t> atom_map;

  std::size_t size() const { return atom_map.size(); }
  std::size_t operator()(std::size_t i) const { return atom_map[i]; }

  // this after other: x -> this(other(x))
  SemiflowMap after(const SemiflowMap& other) const {
    if (size() != other.size()) throw Error(errc::dimension_mismatch, "map composition");
    SemiflowMap out{std::vector<std::size_t>(size())};
    for (std::size_t i = 0; i < size(); ++i) out.atom_map[i] = atom_map[other.atom_map[i]];
    return out;
  }

  // mu(phi^{-1}(M)) = mu(M) for all M; singletons suffice by additivity
  bool is_measure_preserving(const FiniteProbabilitySpace& space, double tol = 1e-12) const {
    if (size() != space.size()) throw Error(errc::dimension_mismatch, "map vs space");
    std::vector<double> pulled(size(), 0.0);
    for (std::size_t x = 0; x < size(); ++x) pulled[atom_map[x]] += space.weight(x);
    for (std::size_t y = 0; y < size(); ++y)
      if (std::abs(pulled[y] - space.weight(y)) > tol) return false;
    return true;
  }

  MeasureAlgebraSet preimage(const MeasureAlgebraSet& m) const {
    if (m.size() != size()) throw Error(errc::dimension_mismatch, "preimage");
    MeasureAlgebraSet out = MeasureAlgebraSet::empty(size());
    for (std::size_t x = 0; x < size(); ++x) out.member[x] = m.member[atom_map[x]];
    return out;
  }

  friend bool operator==(const SemiflowMap& a, const SemiflowMap& b) {
    return a.atom_map == b.atom_map;
  }
};

struct MarkovOperator {
  ComplexMatrix matrix;
  FiniteProbabilitySpace space;

  std::size_t dim() const { return matrix.dim(); }

  MeasurableFunction apply(const MeasurableFunction& f) const {
    return MeasurableFunction(matrix.apply(f.values));
  }
};

// Koopman operator of a map: (Tf)(x) = f(phi(x)).
inline MarkovOperator koopman_of_map(const FiniteProbabilitySpace& space, const SemiflowMap& phi) {
  if (phi.size() != space.size()) throw Error(errc::dimension_mismatch, "koopman_of_map");
  ComplexMatrix m(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    if (phi(x) >= space.size())
      throw Error(errc::invalid_argument, "map target out of range");
    m(x, phi(x)) = 1.0;
  }
  return MarkovOperator{std::move(m), space};
}

struct EntryWitness {
  std::size_t row = 0, col = 0;
  cx value;
};
struct RowSumWitness {
  std::size_t row = 0;
  cx sum;
};
struct ColumnWitness {
  std::size_t col = 0;
  double deviation = 0.0;
};
struct LatticeWitness {
  MeasurableFunction f;
  double deviation = 0.0;
};
struct MultiplicativeWitness {
  MeasurableFunction f, g;
  double deviation = 0.0;
};

// Classification of a single operator against the Markov lattice axioms.
struct OperatorVerdict {
  bool positive = false;
  bool row_stochastic = false;       // T1 = 1
  bool measure_preserving = false;   // T'mu = mu
  bool lattice = false;              // |Tf| = T|f|
  bool multiplicative = false;       // T(fg) = Tf Tg

  std::optional<EntryWitness> positivity_witness;
  std::optional<RowSumWitness> row_sum_witness;
  std::optional<ColumnWitness> measure_witness;
  std::optional<LatticeWitness> lattice_witness;
  std::optional<MultiplicativeWitness> multiplicative_witness;

  bool markov() const { return positive && row_stochastic && measure_preserving; }
  bool markov_lattice() const { return markov() && lattice; }
};

namespace detail {

// Witness candidates, in the fixed reporting order: atom indicators, the
// (1,-1,0,...) pattern, then seeded random complex functions.
inline std::vector<MeasurableFunction> witness_functions(std::size_t n, int random_samples) {
  std::vector<MeasurableFunction> out;
  for (std::size_t i = 0; i < n; ++i) {
    MeasurableFunction f(n);
    f[i] = 1.0;
    out.push_back(std::move(f));
  }
  if (n >= 2) {
    MeasurableFunction f(n);
    f[0] = 1.0;
    f[1] = -1.0;
    out.push_back(std::move(f));
  }
  SplitMix64 rng(0x4B4F4F504D414EULL);  // fixed stream: reports must be reproducible
  for (int s = 0; s < random_samples; ++s) {
    MeasurableFunction f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = rng.next_complex();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace detail

// Checks positivity, T1=1, T'mu=mu, the lattice property and
// multiplicativity. The lattice decision is structural (each row of a
// positive matrix carries at most one nonzero entry); the behavioral
// |Tf| = T|f| scan runs over the witness sequence both to cross-check the
// structural verdict and to produce the reported counterexample.
inline OperatorVerdict classify_operator(const MarkovOperator& t, double tol = 1e-9,
                                         int random_witness_samples = 100) {
  if (!(tol > 0.0)) throw Error(errc::invalid_argument, "tol must be positive");
  const std::size_t n = t.dim();
  if (n != t.space.size()) throw Error(errc::dimension_mismatch, "operator vs space");
  OperatorVerdict v;

  v.positive = true;
  for (std::size_t r = 0; r < n && v.positive; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      cx a = t.matrix(r, c);
      if (std::abs(a.imag()) > tol || a.real() < -tol) {
        v.positive = false;
        v.positivity_witness = EntryWitness{r, c, a};
        break;
      }
    }

  v.row_stochastic = true;
  for (std::size_t r = 0; r < n; ++r) {
    cx s(0.0, 0.0);
    for (std::size_t c = 0; c < n; ++c) s += t.matrix(r, c);
    if (std::abs(s - cx(1.0, 0.0)) > tol) {
      v.row_stochastic = false;
      v.row_sum_witness = RowSumWitness{r, s};
      break;
    }
  }

  v.measure_preserving = true;
  for (std::size_t c = 0; c < n; ++c) {
    cx s(0.0, 0.0);
    for (std::size_t r = 0; r < n; ++r) s += t.space.weight(r) * t.matrix(r, c);
    double dev = std::abs(s - cx(t.space.weight(c), 0.0));
    if (dev > tol) {
      v.measure_preserving = false;
      v.measure_witness = ColumnWitness{c, dev};
      break;
    }
  }

  // structural lattice criterion: positive and at most one nonzero per row
  bool structural = v.positive;
  for (std::size_t r = 0; r < n && structural; ++r) {
    int nonzero = 0;
    for (std::size_t c = 0; c < n; ++c)
      if (std::abs(t.matrix(r, c)) > tol) ++nonzero;
    if (nonzero > 1) structural = false;
  }

  // behavioral scan for |Tf| = T|f|
  double behavioral_dev = 0.0;
  std::optional<LatticeWitness> behavioral_witness;
  auto candidates = detail::witness_functions(n, random_witness_samples);
  for (const auto& f : candidates) {
    MeasurableFunction lhs = abs_value(t.apply(f));
    MeasurableFunction rhs = t.apply(abs_value(f));
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, std::abs(lhs[i] - rhs[i]));
    behavioral_dev = std::max(behavioral_dev, dev);
    if (dev > tol) {
      behavioral_witness = LatticeWitness{f, dev};
      break;
    }
  }
  bool behavioral = !behavioral_witness.has_value();
  if (structural != behavioral) {
    std::ostringstream msg;
    msg << "lattice checks disagree: structural=" << structural
        << " behavioral_dev=" << behavioral_dev;
    throw Error(errc::internal_inconsistency, msg.str());
  }
  v.lattice = structural;
  v.lattice_witness = behavioral_witness;

  // multiplicativity on all pairs of atom indicators (a basis of the algebra)
  v.multiplicative = true;
  for (std::size_t i = 0; i < n && v.multiplicative; ++i) {
    MeasurableFunction ei(n);
    ei[i] = 1.0;
    MeasurableFunction tei = t.apply(ei);
    for (std::size_t j = 0; j < n; ++j) {
      MeasurableFunction ej(n);
      ej[j] = 1.0;
      MeasurableFunction lhs = t.apply(pointwise_product(ei, ej));
      MeasurableFunction rhs = pointwise_product(tei, t.apply(ej));
      double dev = 0.0;
      for (std::size_t x = 0; x < n; ++x) dev = std::max(dev, std::abs(lhs[x] - rhs[x]));
      if (dev > tol) {
        v.multiplicative = false;
        v.multiplicative_witness = MultiplicativeWitness{ei, ej, dev};
        break;
      }
    }
  }

  return v;
}

// Measure algebra homomorphism phi* with T 1_M = 1_{phi*(M)}; carried by the
// atom map of the operator, phi*(M) = phi^{-1}(M).
struct MeasureAlgebraHomomorphism {
  SemiflowMap phi;

  MeasureAlgebraSet apply(const MeasureAlgebraSet& m) const { return phi.preimage(m); }
};

namespace detail {

inline std::optional<SemiflowMap> row_map(const ComplexMatrix& m, double tol) {
  std::size_t n = m.dim();
  SemiflowMap phi{std::vector<std::size_t>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t hits = 0, target = 0;
    for (std::size_t c = 0; c < n; ++c) {
      cx a = m(r, c);
      if (std::abs(a - cx(1.0, 0.0)) <= tol) {
        ++hits;
        target = c;
      } else if (std::abs(a) > tol) {
        return std::nullopt;  // entry neither 0 nor 1
      }
    }
    if (hits != 1) return std::nullopt;
    phi.atom_map[r] = target;
  }
  return phi;
}

}  // namespace detail

// Recovers the measure algebra homomorphism of a Markov lattice operator and
// verifies T 1_M = 1_{phi*(M)} together with measure preservation:
// exhaustively over all sets for n <= 16, on singletons plus X and the empty
// set otherwise.
inline MeasureAlgebraHomomorphism extract_homomorphism(const MarkovOperator& t, double tol = 1e-9) {
  OperatorVerdict v = classify_operator(t, tol);
  if (!v.markov_lattice()) {
    std::ostringstream msg;
    msg << "operator is not Markov lattice (positive=" << v.positive
        << " row_stochastic=" << v.row_stochastic
        << " measure_preserving=" << v.measure_preserving << " lattice=" << v.lattice << ")";
    throw Error(errc::not_markov_lattice, msg.str());
  }
  auto phi = detail::row_map(t.matrix, tol);
  if (!phi)
    throw Error(errc::internal_inconsistency, "markov lattice operator without basis rows");
  MeasureAlgebraHomomorphism hom{*phi};

  const std::size_t n = t.dim();
  auto verify_set = [&](const MeasureAlgebraSet& m) {
    MeasurableFunction lhs = t.apply(indicator(t.space, m));
    MeasurableFunction rhs = indicator(t.space, hom.apply(m));
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(lhs[i] - rhs[i]) > tol)
        throw Error(errc::internal_inconsistency, "homomorphism mismatch on a set");
    if (std::abs(measure(t.space, hom.apply(m)) - measure(t.space, m)) > tol)
      throw Error(errc::internal_inconsistency, "homomorphism does not preserve measure");
  };

  if (n <= 16) {
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask)
      verify_set(MeasureAlgebraSet::from_mask(n, mask));
  } else {
    verify_set(MeasureAlgebraSet::empty(n));
    verify_set(MeasureAlgebraSet::full(n));
    for (std::size_t i = 0; i < n; ++i) verify_set(MeasureAlgebraSet::singleton(n, i));
  }
  return hom;
}

// Reads the underlying point map off a deterministic operator: Tf = f o phi.
// Inverse of koopman_of_map on its image.
inline SemiflowMap map_from_operator(const MarkovOperator& t, double tol = 1e-9) {
  auto phi = detail::row_map(t.matrix, tol);
  if (!phi)
    throw Error(errc::not_deterministic, "a row is not a standard basis vector");
  return *phi;
}

}  // namespace koopman

#endif
