#ifndef KOOPMAN_BASE_HPP
#define KOOPMAN_BASE_HPP

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace koopman {

using cx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

enum class errc {
  non_positive_weight,
  weights_do_not_sum_to_one,
  dimension_mismatch,
  invalid_exponent,
  not_markov_lattice,
  not_deterministic,
  not_measure_preserving,
  q_support_too_wide,
  budget_exceeded,
  singular_matrix,
  internal_inconsistency,
  invalid_argument,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::non_positive_weight: return "NonPositiveWeight";
    case errc::weights_do_not_sum_to_one: return "WeightsDoNotSumToOne";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::invalid_exponent: return "InvalidExponent";
    case errc::not_markov_lattice: return "NotMarkovLattice";
    case errc::not_deterministic: return "NotDeterministic";
    case errc::not_measure_preserving: return "NotMeasurePreserving";
    case errc::q_support_too_wide: return "QSupportTooWide";
    case errc::budget_exceeded: return "BudgetExceeded";
    case errc::singular_matrix: return "SingularMatrix";
    case errc::internal_inconsistency: return "InternalInconsistency";
    case errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

// Parallelism cap shared by the embarrassingly parallel sweeps. The env var
// KOOPMAN_LAB_THREADS caps the worker count; results are always written to
// preallocated disjoint slots, so output does not depend on the cap.
inline unsigned thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("KOOPMAN_LAB_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1 && static_cast<unsigned long>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return hw;
}

// Runs fn(i) for i in [0, count). fn must only touch state indexed by i.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  unsigned workers = thread_budget();
  if (workers <= 1 || count < 2 * workers) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace koopman

#endif
