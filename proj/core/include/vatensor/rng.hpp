#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace vatensor {

// splitmix64 finalizer as a pure function.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key for an independent substream: fold each part into the running key.
// Used as mix(mix(mix(mix(seed) + iteration) + step) + unit) so any (seed,
// iteration, step, unit) tuple owns its own stream regardless of how many
// draws other units consume.
inline std::uint64_t substream_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> parts) {
  std::uint64_t k = mix64(seed);
  for (std::uint64_t p : parts) k = mix64(k + p);
  return k;
}

// Small counter-based generator (splitmix64 stream) with just the sampling
// distributions the Gibbs updates need. Results are identical across
// platforms and across thread counts because every call site derives its own
// substream key instead of sharing one sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  static Rng at(std::uint64_t seed, std::uint64_t iteration, std::uint64_t step,
                std::uint64_t unit) {
    return Rng(substream_key(seed, {iteration, step, unit}));
  }

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1); never returns an exact endpoint.
  double uniform();
  double uniform(double lo, double hi);

  // Inclusive integer range.
  int uniform_int(int lo, int hi);

  double normal();

  // Unit-scale gamma, any shape > 0.
  double gamma(double shape);

  // Clamped away from {0, 1} so downstream logs stay finite.
  double beta(double a, double b);

  // Writes a point on the simplex into out (same length as alpha).
  void dirichlet(std::span<const double> alpha, std::span<double> out);

  // Index draw from nonnegative weights (not necessarily normalized).
  int categorical(std::span<const double> weights);

  // Index draw from log weights. The buffer is normalized in place. When all
  // weights are -inf the draw is impossible: returns -1 and sets *underflow
  // so the caller can fall back to its prior.
  int categorical_from_log(std::span<double> log_weights,
                           bool* underflow = nullptr);

 private:
  std::uint64_t state_;
};

}  // namespace vatensor
