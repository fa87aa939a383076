#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vatensor/types.hpp"

namespace vatensor {

enum class Scenario {
  kStable,   // one symptom-class mixing law for both domains
  kShifted   // independent mixing per domain
};

struct SimConfig {
  int C = 20;
  int p = 80;
  int n_train = 2000;
  int n_target = 1000;
  int K = 3;
  int r = 5;
  int h = 3;
  Scenario scenario = Scenario::kStable;
  int beta_min = 1;   // inclusive concentration range for the mixing draws
  int beta_max = 10;
  std::uint64_t seed = 1;
};

// Row c of the grouping assigns symptoms to r consecutive blocks of size
// p/r, rotated by c-1 positions. Requires r to divide p.
std::vector<int> cyclic_groups(int C, int p, int r);

// Everything the generator drew, for scoring fits against the truth.
struct SimTruth {
  std::vector<double> pi_train, pi_target;  // C each
  std::vector<double> nu;                   // C*h (flat 1/h)
  std::vector<double> psi_train;            // C*h*r*K
  std::vector<double> psi_target;           // same as psi_train when stable
  std::vector<double> phi;                  // effective C*K*p emission table
  std::vector<int> s;                       // C*p grouping
  std::vector<int> y;                       // n true causes (train + target)
  std::vector<int> z;                       // n*r
  std::vector<int> h;                       // n
  int shared_groups = 0;                    // leading groups with cause-shared phi
};

struct SimResult {
  VADataset data;
  SimTruth truth;
};

// Draws a training/target pair. Train rows come first and carry labels; the
// target labels live only in the truth. The first ceil(2r/5) groups share
// their emission probabilities across causes, the rest are cause-specific.
SimResult generate(const SimConfig& sim);

struct ResampleResult {
  VADataset data;
  std::vector<int> truth_y;         // causes of the resampled rows
  std::vector<double> prevalence;   // weights actually used
};

// Draws n_out unlabeled rows with replacement from the labeled rows of
// source, cause-stratified to the given prevalence. Causes with positive
// weight but no labeled rows are dropped and the rest renormalized.
// include_train prepends the untouched labeled rows.
ResampleResult resample_to_prevalence(const VADataset& source,
                                      std::span<const double> prevalence, int n_out,
                                      std::uint64_t seed, bool include_train = true);

}  // namespace vatensor
