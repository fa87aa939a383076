#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace vatensor {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(v))) with the usual max shift. Empty input and all -inf both
// return -inf.
inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) {
    if (x > m) m = x;
  }
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline double log_sum_exp(const double* v, std::size_t n) {
  return log_sum_exp(std::span<const double>(v, n));
}

// Exponentiates log weights into normalized probabilities in place.
// Returns false when every weight is -inf (output left as zeros); callers
// are expected to fall back to something sensible.
inline bool normalize_log_weights(std::span<double> w) {
  double m = kNegInf;
  for (double x : w) {
    if (x > m) m = x;
  }
  if (m == kNegInf) {
    for (double& x : w) x = 0.0;
    return false;
  }
  double total = 0.0;
  for (double& x : w) {
    x = std::exp(x - m);
    total += x;
  }
  for (double& x : w) x /= total;
  return true;
}

inline bool is_simplex(std::span<const double> v, double tol = 1e-12) {
  double total = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) return false;
    total += x;
  }
  return std::abs(total - 1.0) <= tol;
}

// Bernoulli log mass with the success probability given directly.
inline double log_bernoulli(int x, double prob) {
  return x != 0 ? std::log(prob) : std::log1p(-prob);
}

}  // namespace vatensor
