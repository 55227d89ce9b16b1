#ifndef KOOPMAN_SPECTRAL_FLOW_HPP
#define KOOPMAN_SPECTRAL_FLOW_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koopman/matrix.hpp"
#include "koopman/rational.hpp"
#include "koopman/semigroup_engine.hpp"

namespace koopman {

// Truncated frequency lattice: all k in Z^d with |k_j| <= N_j. Closed under
// negation and contains k = 0.
class ModeLattice {
 public:
  explicit ModeLattice(std::vector<int> half_widths) : half_widths_(std::move(half_widths)) {
    if (half_widths_.empty()) throw Error(errc::invalid_argument, "lattice needs d >= 1");
    std::size_t total = 1;
    for (int n : half_widths_) {
      if (n < 1) throw Error(errc::invalid_argument, "truncation N must be >= 1");
      std::size_t w = 2 * static_cast<std::size_t>(n) + 1;
      if (total > kModeBudget / w)
        throw Error(errc::budget_exceeded, "mode lattice exceeds " + std::to_string(kModeBudget));
      total *= w;
    }
    size_ = total;
    strides_.assign(half_widths_.size(), 1);
    for (std::size_t d = half_widths_.size(); d-- > 1;)
      strides_[d - 1] = strides_[d] * (2 * static_cast<std::size_t>(half_widths_[d]) + 1);
  }

  std::size_t dims() const { return half_widths_.size(); }
  std::size_t size() const { return size_; }
  int half_width(std::size_t d) const { return half_widths_[d]; }
  const std::vector<int>& half_widths() const { return half_widths_; }

  std::vector<int> unrank(std::size_t idx) const {
    std::vector<int> k(dims());
    for (std::size_t d = 0; d < dims(); ++d) {
      std::size_t w = 2 * static_cast<std::size_t>(half_widths_[d]) + 1;
      k[d] = static_cast<int>((idx / strides_[d]) % w) - half_widths_[d];
    }
    return k;
  }

  std::optional<std::size_t> rank(std::span<const int> k) const {
    if (k.size() != dims()) throw Error(errc::dimension_mismatch, "mode arity");
    std::size_t idx = 0;
    for (std::size_t d = 0; d < dims(); ++d) {
      if (k[d] < -half_widths_[d] || k[d] > half_widths_[d]) return std::nullopt;
      idx += static_cast<std::size_t>(k[d] + half_widths_[d]) * strides_[d];
    }
    return idx;
  }

  std::size_t zero_index() const {
    std::size_t idx = 0;
    for (std::size_t d = 0; d < dims(); ++d)
      idx += static_cast<std::size_t>(half_widths_[d]) * strides_[d];
    return idx;
  }

  std::size_t negate(std::size_t idx) const {
    std::vector<int> k = unrank(idx);
    for (auto& c : k) c = -c;
    return *rank(k);  // window is symmetric
  }

  static constexpr std::size_t kModeBudget = 1'000'000;

 private:
  std::vector<int> half_widths_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Frequency of one torus coordinate; carries an exact rational form when the
// input is one (detected at one-ulp strictness, see exact_rational_of).
struct Frequency {
  double value = 0.0;
  std::optional<Rational> exact;

  static Frequency of(double v) { return Frequency{v, exact_rational_of(v)}; }
  static Frequency of(const Rational& r) { return Frequency{r.to_double(), r}; }
};

// Fourier model of a rotation flow on T^d: phi_t(x) = x + t alpha, with modes
// truncated to the lattice window. Generator eigenvalues are i lambda_k with
// lambda_k = 2 pi (k . alpha).
class SpectralFlowModel {
 public:
  SpectralFlowModel(std::vector<Frequency> alpha, std::vector<int> half_widths)
      : alpha_(std::move(alpha)), lattice_(std::move(half_widths)) {
    if (alpha_.size() != lattice_.dims())
      throw Error(errc::dimension_mismatch, "alpha arity vs lattice dims");
    lambda_.resize(lattice_.size());
    for (std::size_t i = 0; i < lattice_.size(); ++i)
      lambda_[i] = kTwoPi * dot_alpha(lattice_.unrank(i));
  }

  const ModeLattice& modes() const { return lattice_; }
  std::span<const Frequency> frequencies() const { return alpha_; }
  std::size_t mode_count() const { return lattice_.size(); }
  double lambda(std::size_t mode) const { return lambda_[mode]; }
  std::span<const double> lambdas() const { return lambda_; }

  double dot_alpha(std::span<const int> k) const {
    double acc = 0.0;
    for (std::size_t d = 0; d < alpha_.size(); ++d) acc += k[d] * alpha_[d].value;
    return acc;
  }

  bool all_rational() const {
    for (const auto& a : alpha_)
      if (!a.exact) return false;
    return true;
  }

  // k . alpha as an exact rational; empty when some frequency is irrational
  std::optional<Rational> dot_alpha_exact(std::span<const int> k) const {
    Rational acc(0, 1);
    for (std::size_t d = 0; d < alpha_.size(); ++d) {
      if (!alpha_[d].exact) return std::nullopt;
      acc = acc + Rational::integer(k[d]) * (*alpha_[d].exact);
    }
    return acc;
  }

 private:
  std::vector<Frequency> alpha_;
  ModeLattice lattice_;
  std::vector<double> lambda_;
};

// Diagonal generator in Fourier coordinates, aligned with the mode lattice.
struct DiagonalGenerator {
  std::vector<cx> eigenvalues;
};

// Function on the torus given by finitely many Fourier coefficients, aligned
// with the mode lattice.
struct FourierFunction {
  std::vector<cx> coefficients;

  static FourierFunction zero(const SpectralFlowModel& m) {
    return FourierFunction{std::vector<cx>(m.mode_count(), cx(0.0, 0.0))};
  }
  static FourierFunction basis_mode(const SpectralFlowModel& m, std::span<const int> k) {
    auto idx = m.modes().rank(k);
    if (!idx) throw Error(errc::q_support_too_wide, "mode outside truncation window");
    FourierFunction f = zero(m);
    f.coefficients[*idx] = 1.0;
    return f;
  }
  static FourierFunction one(const SpectralFlowModel& m) {
    FourierFunction f = zero(m);
    f.coefficients[m.modes().zero_index()] = 1.0;
    return f;
  }
};

struct RotationFlow {
  SpectralFlowModel model;
  DiagonalGenerator generator;
};

inline RotationFlow rotation_model(std::span<const double> alpha, int truncation) {
  std::vector<Frequency> freqs;
  for (double a : alpha) freqs.push_back(Frequency::of(a));
  SpectralFlowModel model(std::move(freqs), std::vector<int>(alpha.size(), truncation));
  DiagonalGenerator gen;
  gen.eigenvalues.resize(model.mode_count());
  for (std::size_t i = 0; i < model.mode_count(); ++i)
    gen.eigenvalues[i] = cx(0.0, model.lambda(i));
  return RotationFlow{std::move(model), std::move(gen)};
}

inline RotationFlow rotation_model(std::initializer_list<double> alpha, int truncation) {
  return rotation_model(std::span<const double>(alpha.begin(), alpha.size()), truncation);
}

// Concatenates rotation factors; frequencies stack and eigenvalues add across
// factors. Throws BudgetExceeded when the combined lattice exceeds the mode
// budget.
inline RotationFlow product_flow(std::span<const RotationFlow> factors) {
  if (factors.empty()) throw Error(errc::invalid_argument, "product of zero flows");
  std::vector<Frequency> alpha;
  std::vector<int> widths;
  for (const auto& f : factors) {
    for (const auto& a : f.model.frequencies()) alpha.push_back(a);
    for (int n : f.model.modes().half_widths()) widths.push_back(n);
  }
  SpectralFlowModel model(std::move(alpha), std::move(widths));
  DiagonalGenerator gen;
  gen.eigenvalues.resize(model.mode_count());
  for (std::size_t i = 0; i < model.mode_count(); ++i)
    gen.eigenvalues[i] = cx(0.0, model.lambda(i));
  return RotationFlow{std::move(model), std::move(gen)};
}

// ---------------------------------------------------------------------------
// derivation criterion and evolution
// ---------------------------------------------------------------------------

struct AdditivityReport {
  bool pass = true;
  double deviation = 0.0;
  std::vector<int> k, l;  // witness pair when failed
};

namespace detail {

// Mode indices sorted smallest-first: by |k|_1, then coordinatewise by
// (|k_j|, sign) with positive before negative. Scans in this order make the
// reported witness the minimal violating pair.
inline std::vector<std::size_t> modes_by_size(const ModeLattice& lat) {
  std::vector<std::size_t> order(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) order[i] = i;
  auto key_less = [&](std::size_t a, std::size_t b) {
    std::vector<int> ka = lat.unrank(a), kb = lat.unrank(b);
    int la = 0, lb = 0;
    for (int c : ka) la += std::abs(c);
    for (int c : kb) lb += std::abs(c);
    if (la != lb) return la < lb;
    for (std::size_t d = 0; d < ka.size(); ++d) {
      if (std::abs(ka[d]) != std::abs(kb[d])) return std::abs(ka[d]) < std::abs(kb[d]);
      if ((ka[d] < 0) != (kb[d] < 0)) return kb[d] < 0;
    }
    return false;
  };
  std::sort(order.begin(), order.end(), key_less);
  return order;
}

}  // namespace detail

// In Fourier coordinates e_k e_l = e_{k+l}, so the Leibniz rule for a
// diagonal generator is exactly additivity of eigenvalues. Quantifies over
// all pairs with k, l, k+l inside the truncation window.
inline AdditivityReport additivity_derivation_check(const SpectralFlowModel& model,
                                                    const DiagonalGenerator& gen,
                                                    double tol = 1e-9) {
  if (gen.eigenvalues.size() != model.mode_count())
    throw Error(errc::dimension_mismatch, "generator vs lattice");
  const auto& lat = model.modes();
  AdditivityReport rep;
  std::vector<std::size_t> order = detail::modes_by_size(lat);
  std::vector<int> sum(lat.dims());
  for (std::size_t a = 0; a < order.size(); ++a) {
    std::vector<int> ki = lat.unrank(order[a]);
    for (std::size_t b = a; b < order.size(); ++b) {
      std::vector<int> kj = lat.unrank(order[b]);
      for (std::size_t d = 0; d < lat.dims(); ++d) sum[d] = ki[d] + kj[d];
      auto idx = lat.rank(sum);
      if (!idx) continue;
      double dev = std::abs(gen.eigenvalues[order[a]] + gen.eigenvalues[order[b]] -
                            gen.eigenvalues[*idx]);
      if (dev > tol) {
        rep.pass = false;
        rep.deviation = dev;
        rep.k = ki;
        rep.l = kj;
        return rep;
      }
      rep.deviation = std::max(rep.deviation, dev);
    }
  }
  return rep;
}

// coefficient-wise e^{t g_k}
inline FourierFunction evolve_spectral(const DiagonalGenerator& gen, double t,
                                       const FourierFunction& f) {
  if (t < 0.0) throw Error(errc::invalid_argument, "t must be nonnegative");
  if (f.coefficients.size() != gen.eigenvalues.size())
    throw Error(errc::dimension_mismatch, "function vs generator");
  FourierFunction out = f;
  for (std::size_t i = 0; i < out.coefficients.size(); ++i)
    out.coefficients[i] *= std::exp(cx(t, 0.0) * gen.eigenvalues[i]);
  return out;
}

inline FourierFunction fourier_conjugate(const SpectralFlowModel& model, const FourierFunction& f) {
  FourierFunction out = FourierFunction::zero(model);
  for (std::size_t i = 0; i < f.coefficients.size(); ++i)
    out.coefficients[model.modes().negate(i)] = std::conj(f.coefficients[i]);
  return out;
}

// L^2(T^d) inner product; the modes are orthonormal.
inline cx fourier_inner(const FourierFunction& f, const FourierFunction& g) {
  if (f.coefficients.size() != g.coefficients.size())
    throw Error(errc::dimension_mismatch, "inner product");
  cx acc(0.0, 0.0);
  for (std::size_t i = 0; i < f.coefficients.size(); ++i)
    acc += f.coefficients[i] * std::conj(g.coefficients[i]);
  return acc;
}

inline double coeff_l1(const FourierFunction& f) {
  double acc = 0.0;
  for (const auto& c : f.coefficients) acc += std::abs(c);
  return acc;
}

inline double coeff_l2(const FourierFunction& f) {
  double acc = 0.0;
  for (const auto& c : f.coefficients) acc += std::norm(c);
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// grid evaluation (for pointwise products and sup norms)
// ---------------------------------------------------------------------------

namespace detail {

struct TorusGrid {
  std::vector<std::size_t> sizes;          // per-dimension point count
  std::size_t total = 1;
  // phase[d][(k + N_d) * sizes[d] + m] = e^{2 pi i k m / M_d}
  std::vector<std::vector<cx>> phase;
};

inline TorusGrid make_grid(const SpectralFlowModel& model, int oversample) {
  if (oversample < 2) throw Error(errc::invalid_argument, "oversample must be >= 2");
  const auto& lat = model.modes();
  TorusGrid g;
  g.sizes.resize(lat.dims());
  g.phase.resize(lat.dims());
  for (std::size_t d = 0; d < lat.dims(); ++d) {
    int n = lat.half_width(d);
    std::size_t m = static_cast<std::size_t>(oversample) * (2 * n + 1);
    g.sizes[d] = m;
    g.total *= m;
    g.phase[d].resize((2 * n + 1) * m);
    for (int k = -n; k <= n; ++k)
      for (std::size_t pt = 0; pt < m; ++pt) {
        double angle = kTwoPi * k * static_cast<double>(pt) / static_cast<double>(m);
        g.phase[d][(k + n) * m + pt] = cx(std::cos(angle), std::sin(angle));
      }
  }
  return g;
}

// flattened per-point coordinate table, laid out point-major
inline std::vector<std::size_t> grid_points(const TorusGrid& g) {
  std::size_t d = g.sizes.size();
  std::vector<std::size_t> pts(g.total * d);
  for (std::size_t idx = 0; idx < g.total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t dd = d; dd-- > 0;) {
      pts[idx * d + dd] = rest % g.sizes[dd];
      rest /= g.sizes[dd];
    }
  }
  return pts;
}

}  // namespace detail

inline std::vector<cx> grid_values(const SpectralFlowModel& model, const FourierFunction& f,
                                   int oversample = 4) {
  const auto& lat = model.modes();
  detail::TorusGrid g = detail::make_grid(model, oversample);
  std::vector<std::size_t> pts = detail::grid_points(g);
  std::size_t d = lat.dims();
  std::vector<cx> out(g.total, cx(0.0, 0.0));
  for (std::size_t mode = 0; mode < lat.size(); ++mode) {
    cx c = f.coefficients[mode];
    if (c == cx(0.0, 0.0)) continue;
    std::vector<int> k = lat.unrank(mode);
    for (std::size_t p = 0; p < g.total; ++p) {
      cx phase(1.0, 0.0);
      for (std::size_t dd = 0; dd < d; ++dd)
        phase *= g.phase[dd][(k[dd] + lat.half_width(dd)) * g.sizes[dd] + pts[p * d + dd]];
      out[p] += c * phase;
    }
  }
  return out;
}

// Projects grid samples back onto the truncated mode window (higher modes are
// dropped; with smooth data and the default oversampling the aliasing error
// is far below the verification tolerances).
inline FourierFunction project_from_grid(const SpectralFlowModel& model,
                                         std::span<const cx> values, int oversample = 4) {
  const auto& lat = model.modes();
  detail::TorusGrid g = detail::make_grid(model, oversample);
  if (values.size() != g.total) throw Error(errc::dimension_mismatch, "grid size");
  std::vector<std::size_t> pts = detail::grid_points(g);
  std::size_t d = lat.dims();
  FourierFunction out = FourierFunction::zero(model);
  for (std::size_t mode = 0; mode < lat.size(); ++mode) {
    std::vector<int> k = lat.unrank(mode);
    cx acc(0.0, 0.0);
    for (std::size_t p = 0; p < g.total; ++p) {
      cx phase(1.0, 0.0);
      for (std::size_t dd = 0; dd < d; ++dd)
        phase *= g.phase[dd][(k[dd] + lat.half_width(dd)) * g.sizes[dd] + pts[p * d + dd]];
      acc += values[p] * std::conj(phase);
    }
    out.coefficients[mode] = acc / static_cast<double>(g.total);
  }
  return out;
}

inline double sup_norm(const SpectralFlowModel& model, const FourierFunction& f,
                       int oversample = 4) {
  double best = 0.0;
  for (const auto& v : grid_values(model, f, oversample)) best = std::max(best, std::abs(v));
  return best;
}

// Pointwise product on the torus, projected back onto the window. Exact for
// band-limited factors whose convolution stays inside the window.
inline FourierFunction fourier_product(const SpectralFlowModel& model, const FourierFunction& f,
                                       const FourierFunction& g, int oversample = 4) {
  std::vector<cx> fg = grid_values(model, f, oversample);
  std::vector<cx> gg = grid_values(model, g, oversample);
  for (std::size_t i = 0; i < fg.size(); ++i) fg[i] *= gg[i];
  return project_from_grid(model, fg, oversample);
}

// ---------------------------------------------------------------------------
// bridge to the dense-matrix engine
// ---------------------------------------------------------------------------

// Matrix of gen + multiplication-by-q on the truncated Fourier coordinates.
// Multiplication by q is the convolution (q f)_k = sum_l q_{k-l} f_l; products
// pushed outside the window are dropped.
inline ComplexMatrix to_matrix(const SpectralFlowModel& model, const DiagonalGenerator& gen,
                               const FourierFunction* q = nullptr) {
  const auto& lat = model.modes();
  if (gen.eigenvalues.size() != lat.size())
    throw Error(errc::dimension_mismatch, "generator vs lattice");
  if (q && q->coefficients.size() != lat.size())
    throw Error(errc::q_support_too_wide, "q must live on the model's mode window");
  ComplexMatrix m(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) m(i, i) = gen.eigenvalues[i];
  if (q) {
    std::vector<int> diff(lat.dims());
    for (std::size_t row = 0; row < lat.size(); ++row) {
      std::vector<int> k = lat.unrank(row);
      for (std::size_t col = 0; col < lat.size(); ++col) {
        std::vector<int> l = lat.unrank(col);
        for (std::size_t d = 0; d < lat.dims(); ++d) diff[d] = k[d] - l[d];
        auto idx = lat.rank(diff);
        if (!idx) continue;
        cx qc = q->coefficients[*idx];
        if (qc != cx(0.0, 0.0)) m(row, col) += qc;
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// perturbation formula on the spectral model
// ---------------------------------------------------------------------------

// S(t) f = exp(int_0^t T(s) q ds) T(t) f with T(s) = e^{s delta} evaluated
// exactly mode-wise; the pointwise exponential and product run on an
// oversampled grid and are projected back onto the window.
inline FourierFunction perturbed_evolve(const SpectralFlowModel& model,
                                        const DiagonalGenerator& delta, const FourierFunction& q,
                                        double t, const FourierFunction& f, int quad_steps = 256,
                                        int oversample = 4) {
  if (t < 0.0) throw Error(errc::invalid_argument, "t must be nonnegative");
  if (quad_steps < 1) throw Error(errc::invalid_argument, "quad_steps must be >= 1");
  if (t == 0.0) return f;

  std::vector<cx> integral = simpson_vector(
      [&](double s) { return evolve_spectral(delta, s, q).coefficients; }, 0.0, t, quad_steps);

  FourierFunction evolved = evolve_spectral(delta, t, f);
  std::vector<cx> grid_integral = grid_values(model, FourierFunction{integral}, oversample);
  std::vector<cx> grid_evolved = grid_values(model, evolved, oversample);
  for (std::size_t i = 0; i < grid_evolved.size(); ++i)
    grid_evolved[i] *= std::exp(grid_integral[i]);
  return project_from_grid(model, grid_evolved, oversample);
}

// Independent route: exponential of the truncated matrix of delta + q.
// Residuals are coefficient-l1 over the window.
inline PerturbationReport verify_perturbation(const SpectralFlowModel& model,
                                              const DiagonalGenerator& delta,
                                              const FourierFunction& q,
                                              std::span<const double> t_grid,
                                              const FourierFunction& f, double tol = 1e-6,
                                              int quad_steps = 256, int oversample = 4) {
  ComplexMatrix full = to_matrix(model, delta, &q);
  PerturbationReport rep;
  for (double t : t_grid) {
    FourierFunction lhs = perturbed_evolve(model, delta, q, t, f, quad_steps, oversample);
    std::vector<cx> rhs = expm(full * cx(t, 0.0)).apply(f.coefficients);
    double res = 0.0;
    for (std::size_t i = 0; i < rhs.size(); ++i) res += std::abs(lhs.coefficients[i] - rhs[i]);
    rep.per_t.emplace_back(t, res);
    rep.max_residual = std::max(rep.max_residual, res);
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

// Operator-level face of eigenvalue additivity: how far
// T(t)e_k T(t)e_l is from T(t)e_{k+l} over triples inside the window.
struct MultiplicativityReport {
  double max_deviation = 0.0;
  std::vector<int> k, l;
};

inline MultiplicativityReport evolution_multiplicativity(const SpectralFlowModel& model,
                                                         const DiagonalGenerator& gen, double t) {
  const auto& lat = model.modes();
  MultiplicativityReport rep;
  std::vector<int> sum(lat.dims());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    std::vector<int> ki = lat.unrank(i);
    for (std::size_t j = i; j < lat.size(); ++j) {
      std::vector<int> kj = lat.unrank(j);
      for (std::size_t d = 0; d < lat.dims(); ++d) sum[d] = ki[d] + kj[d];
      auto idx = lat.rank(sum);
      if (!idx) continue;
      cx lhs = std::exp(cx(t, 0.0) * (gen.eigenvalues[i] + gen.eigenvalues[j]));
      cx rhs = std::exp(cx(t, 0.0) * gen.eigenvalues[*idx]);
      double dev = std::abs(lhs - rhs);
      if (dev > rep.max_deviation) {
        rep.max_deviation = dev;
        rep.k = ki;
        rep.l = kj;
      }
    }
  }
  return rep;
}

// deviation at one pair: | e^{t(g_k + g_l)} - e^{t g_{k+l}} |
inline double pair_multiplicativity_deviation(const SpectralFlowModel& model,
                                              const DiagonalGenerator& gen, double t,
                                              std::span<const int> k, std::span<const int> l) {
  const auto& lat = model.modes();
  auto ik = lat.rank(k), il = lat.rank(l);
  if (!ik || !il) throw Error(errc::invalid_argument, "pair outside truncation window");
  std::vector<int> sum(lat.dims());
  for (std::size_t d = 0; d < lat.dims(); ++d) sum[d] = k[d] + l[d];
  auto is = lat.rank(sum);
  if (!is) throw Error(errc::invalid_argument, "pair sum outside truncation window");
  cx lhs = std::exp(cx(t, 0.0) * (gen.eigenvalues[*ik] + gen.eigenvalues[*il]));
  cx rhs = std::exp(cx(t, 0.0) * gen.eigenvalues[*is]);
  return std::abs(lhs - rhs);
}

// max_k | |e^{t g_k}| - 1 |
inline double isometry_deviation(const DiagonalGenerator& gen, double t) {
  double worst = 0.0;
  for (const auto& ev : gen.eigenvalues)
    worst = std::max(worst, std::abs(std::abs(std::exp(cx(t, 0.0) * ev)) - 1.0));
  return worst;
}

}  // namespace koopman

#endif
