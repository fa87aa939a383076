#include "vatensor/rng.hpp"

#include <cmath>

#include "vatensor/error.hpp"
#include "vatensor/numeric.hpp"

namespace vatensor {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kProbClamp = 1e-12;
}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  // 53 random bits, shifted into the open interval.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw DimensionError("uniform_int: empty range");
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw DimensionError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost trick: draw at shape+1, scale back by a uniform power.
    double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  // Marsaglia and Tsang squeeze.
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

double Rng::beta(double a, double b) {
  double ga = gamma(a);
  double gb = gamma(b);
  double total = ga + gb;
  double value = total > 0.0 ? ga / total : 0.5;
  if (value < kProbClamp) value = kProbClamp;
  if (value > 1.0 - kProbClamp) value = 1.0 - kProbClamp;
  return value;
}

void Rng::dirichlet(std::span<const double> alpha, std::span<double> out) {
  if (alpha.size() != out.size() || alpha.empty()) {
    throw DimensionError("dirichlet: alpha/out size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = gamma(alpha[i]);
    total += out[i];
  }
  if (total <= 0.0) {
    double flat = 1.0 / static_cast<double>(out.size());
    for (double& x : out) x = flat;
    return;
  }
  for (double& x : out) x /= total;
}

int Rng::categorical(std::span<const double> weights) {
  if (weights.empty()) throw DimensionError("categorical: empty weights");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw NumericError("categorical: weights sum to zero");
  double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

int Rng::categorical_from_log(std::span<double> log_weights, bool* underflow) {
  if (underflow != nullptr) *underflow = false;
  if (log_weights.empty()) {
    throw DimensionError("categorical_from_log: empty weights");
  }
  if (!normalize_log_weights(log_weights)) {
    if (underflow != nullptr) *underflow = true;
    return -1;
  }
  return categorical(log_weights);
}

}  // namespace vatensor
