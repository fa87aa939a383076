#pragma once

#include <vector>

#include "vatensor/types.hpp"

namespace vatensor {

// Fraction of retained sweeps in which each group is occupied (some symptom
// assigned to it) per cause, with the cross-cause average.
struct GroupUtilization {
  int C = 0, r = 0;
  std::vector<double> fraction;  // C*r
  std::vector<double> average;   // r
  std::vector<int> order;        // C*r group ids, per cause sorted by fraction desc
};
GroupUtilization group_utilization(const PosteriorDraws& draws);

// Fraction of retained sweeps in which class k is occupied by at least one
// death of cause c in group s.
struct ClassUtilization {
  int C = 0, r = 0, K = 0;
  std::vector<double> fraction;  // C*r*K
  std::vector<int> order;        // C*r*K class ids, per (cause, group) sorted desc
};
ClassUtilization class_utilization(const PosteriorDraws& draws);

// Two readings of "how many groups are enough": count of groups whose average
// utilization exceeds the threshold (the default recommendation), and the
// shortest prefix of sorted groups holding the given share of total
// utilization mass.
struct RSelection {
  int recommended = 1;
  int by_threshold = 1;
  int by_coverage = 1;
  double threshold = 0.05;
  double coverage = 0.95;
};
RSelection select_r(const GroupUtilization& util, double threshold = 0.05,
                    double coverage = 0.95);

// Smallest per-group class budget K0 such that keeping the top K0 classes of
// every (cause, group) captures the required share of all classes whose
// utilization exceeds the threshold.
struct KSelection {
  int recommended = 1;
  double achieved = 1.0;       // share captured at the recommendation
  int above_threshold = 0;     // total classes over the threshold
  double threshold = 0.05;
  double coverage = 0.80;
};
KSelection select_k(const ClassUtilization& util, double threshold = 0.05,
                    double coverage = 0.80);

// p(Z_s = k | Y = c) as an r*K matrix: the nu-weighted mixture of psi rows
// for the coupled family, lambda rows directly otherwise.
std::vector<double> group_class_weights(const ModelParams& params, int c);

// Per-symptom posterior mode of the group assignment for one cause, ranked
// for reading: groups ordered by decreasing average empirical symptom rate,
// symptoms within a group by mode probability (ties by empirical rate, then
// index). ranked lists every symptom exactly once; top_m is a display hint
// marking the leading entries of each group as its anchors.
struct SymptomTopics {
  int c = 0, r = 0, p = 0;
  int top_m = 5;
  std::vector<int> mode_group;    // p
  std::vector<double> mode_prob;  // p
  std::vector<double> empirical;  // p; labeled-row fraction of X_j = 1 given cause c
  std::vector<int> group_order;   // r
  std::vector<int> ranked;        // p symptom ids
};
SymptomTopics symptom_topics(const PosteriorDraws& draws, const VADataset& data, int c,
                             int top_m = 5);

// Rao-Blackwellized cause masses per unlabeled row (mean of the sampled
// full-conditional distributions), raw draw frequencies, and the argmax.
struct CauseProbs {
  int C = 0;
  std::vector<int> rows;     // dataset row indices
  std::vector<double> mean;  // T*C
  std::vector<double> freq;  // T*C
  std::vector<int> top;      // T
};
CauseProbs individual_cause_probs(const PosteriorDraws& draws);

// Componentwise mean and equal-tailed interval of the target prevalence.
struct CsmfEstimate {
  double level = 0.95;
  std::vector<double> mean, lower, upper;  // C each
};
CsmfEstimate csmf_estimate(const PosteriorDraws& draws, double level = 0.95);

// Index of the retained sweep with the highest joint log density (first on
// ties). Interpretive reports read parameters from this single sweep, which
// sidesteps label switching across sweeps.
int map_sweep(const PosteriorDraws& draws);

// Rebuilds a ModelParams view of one retained sweep. phi is present only
// when the chain stored it.
ModelParams snapshot_params(const PosteriorDraws& draws, int index);

}  // namespace vatensor
