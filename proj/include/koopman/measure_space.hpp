#ifndef KOOPMAN_MEASURE_SPACE_HPP
#define KOOPMAN_MEASURE_SPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "koopman/base.hpp"

namespace koopman {

// Finite probability space: atoms with strictly positive weights summing to 1.
// Zero-weight atoms are rejected at construction, so a.e.-equivalence is plain
// equality and the measure algebra is the full power set of atoms.
class FiniteProbabilitySpace {
 public:
  explicit FiniteProbabilitySpace(std::vector<double> weights,
                                  std::vector<std::string> labels = {})
      : weights_(std::move(weights)), labels_(std::move(labels)) {
    if (weights_.empty())
      throw Error(errc::invalid_argument, "space needs at least one atom");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
        throw Error(errc::non_positive_weight,
                    "atom " + std::to_string(i) + " has weight " + std::to_string(weights_[i]));
      sum += weights_[i];
    }
    if (std::abs(sum - 1.0) > kWeightTolerance)
      throw Error(errc::weights_do_not_sum_to_one,
                  "weights sum to " + std::to_string(sum));
    if (labels_.empty()) {
      labels_.reserve(weights_.size());
      for (std::size_t i = 0; i < weights_.size(); ++i) labels_.push_back(std::to_string(i));
    } else if (labels_.size() != weights_.size()) {
      throw Error(errc::dimension_mismatch, "labels/weights length mismatch");
    }
  }

  static FiniteProbabilitySpace uniform(std::size_t n) {
    return FiniteProbabilitySpace(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const { return weights_.size(); }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::string>& labels() const { return labels_; }

  static constexpr double kWeightTolerance = 1e-12;

 private:
  std::vector<double> weights_;
  std::vector<std::string> labels_;
};

// Subset of atoms, one flag per atom.
struct MeasureAlgebraSet {
  std::vector<bool> member;

  static MeasureAlgebraSet empty(std::size_t n) { return {std::vector<bool>(n, false)}; }
  static MeasureAlgebraSet full(std::size_t n) { return {std::vector<bool>(n, true)}; }
  static MeasureAlgebraSet singleton(std::size_t n, std::size_t i) {
    MeasureAlgebraSet s = empty(n);
    s.member[i] = true;
    return s;
  }
  // bit i of mask selects atom i; handy for exhaustive sweeps with n <= 63
  static MeasureAlgebraSet from_mask(std::size_t n, std::uint64_t mask) {
    MeasureAlgebraSet s = empty(n);
    for (std::size_t i = 0; i < n; ++i) s.member[i] = (mask >> i) & 1u;
    return s;
  }

  std::size_t size() const { return member.size(); }
  bool contains(std::size_t i) const { return member[i]; }
  std::size_t count() const {
    std::size_t c = 0;
    for (bool b : member) c += b;
    return c;
  }
  bool is_empty() const { return count() == 0; }
  bool is_full() const { return count() == member.size(); }

  friend bool operator==(const MeasureAlgebraSet& a, const MeasureAlgebraSet& b) {
    return a.member == b.member;
  }
};

inline MeasureAlgebraSet set_intersection(const MeasureAlgebraSet& a, const MeasureAlgebraSet& b) {
  if (a.size() != b.size()) throw Error(errc::dimension_mismatch, "set intersection");
  MeasureAlgebraSet out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.member[i] = a.member[i] && b.member[i];
  return out;
}

inline MeasureAlgebraSet set_complement(const MeasureAlgebraSet& a) {
  MeasureAlgebraSet out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.member[i] = !a.member[i];
  return out;
}

// Complex function on the atoms; the coordinate form of f in L^p(X).
struct MeasurableFunction {
  std::vector<cx> values;

  MeasurableFunction() = default;
  explicit MeasurableFunction(std::vector<cx> v) : values(std::move(v)) {}
  explicit MeasurableFunction(std::size_t n) : values(n, cx(0.0, 0.0)) {}

  static MeasurableFunction constant(std::size_t n, cx c) {
    return MeasurableFunction(std::vector<cx>(n, c));
  }
  static MeasurableFunction one(std::size_t n) { return constant(n, cx(1.0, 0.0)); }

  std::size_t size() const { return values.size(); }
  cx& operator[](std::size_t i) { return values[i]; }
  const cx& operator[](std::size_t i) const { return values[i]; }
};

inline void check_dims(const FiniteProbabilitySpace& space, const MeasurableFunction& f) {
  if (f.size() != space.size())
    throw Error(errc::dimension_mismatch, "function length != atom count");
}

// integral of f against mu
inline cx integral(const FiniteProbabilitySpace& space, const MeasurableFunction& f) {
  check_dims(space, f);
  cx acc(0.0, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * space.weight(i);
  return acc;
}

inline double measure(const FiniteProbabilitySpace& space, const MeasureAlgebraSet& m) {
  if (m.size() != space.size()) throw Error(errc::dimension_mismatch, "set length != atom count");
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.member[i]) acc += space.weight(i);
  return acc;
}

// (sum |f|^p mu)^(1/p); max |f| for p = infinity
inline double lp_norm(const FiniteProbabilitySpace& space, const MeasurableFunction& f, double p) {
  check_dims(space, f);
  if (std::isinf(p) && p > 0) {
    double best = 0.0;
    for (const auto& v : f.values) best = std::max(best, std::abs(v));
    return best;
  }
  if (!(p >= 1.0) || !std::isfinite(p))
    throw Error(errc::invalid_exponent, "p must satisfy p >= 1 or p = inf");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::pow(std::abs(f[i]), p) * space.weight(i);
  return std::pow(acc, 1.0 / p);
}

inline MeasurableFunction pointwise_product(const MeasurableFunction& f, const MeasurableFunction& g) {
  if (f.size() != g.size()) throw Error(errc::dimension_mismatch, "pointwise product");
  MeasurableFunction out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] * g[i];
  return out;
}

inline MeasurableFunction conjugate(const MeasurableFunction& f) {
  MeasurableFunction out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::conj(f[i]);
  return out;
}

inline MeasurableFunction abs_value(const MeasurableFunction& f) {
  MeasurableFunction out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = cx(std::abs(f[i]), 0.0);
  return out;
}

inline MeasurableFunction indicator(const FiniteProbabilitySpace& space, const MeasureAlgebraSet& m) {
  if (m.size() != space.size()) throw Error(errc::dimension_mismatch, "indicator");
  MeasurableFunction out(space.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m.member[i] ? cx(1.0, 0.0) : cx(0.0, 0.0);
  return out;
}

// Coarsest partition of the atoms on whose cells every f in fs is constant.
// The algebra generated by fs is exactly the functions measurable with
// respect to this partition. Cells are ordered by their smallest atom.
inline std::vector<std::vector<std::size_t>> generated_partition(
    const FiniteProbabilitySpace& space, std::span<const MeasurableFunction> fs,
    double tol = 1e-9) {
  std::size_t n = space.size();
  for (const auto& f : fs) check_dims(space, f);

  std::vector<std::vector<std::size_t>> cells;
  cells.push_back({});
  for (std::size_t i = 0; i < n; ++i) cells[0].push_back(i);

  for (const auto& f : fs) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& cell : cells) {
      std::vector<std::vector<std::size_t>> groups;
      std::vector<cx> reps;
      for (std::size_t atom : cell) {
        bool placed = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
          if (std::abs(f[atom] - reps[g]) <= tol) {
            groups[g].push_back(atom);
            placed = true;
            break;
          }
        }
        if (!placed) {
          groups.push_back({atom});
          reps.push_back(f[atom]);
        }
      }
      for (auto& g : groups) next.push_back(std::move(g));
    }
    cells = std::move(next);
  }

  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return cells;
}

}  // namespace koopman

#endif
