#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vatensor/types.hpp"

namespace vatensor {

// Bernoulli log masses cached per (cause, symptom, class) with the class axis
// contiguous. Rebuilt whenever phi changes.
struct LogPhiTables {
  int C = 0, K = 0, p = 0;
  std::vector<double> log_one;   // log phi
  std::vector<double> log_zero;  // log(1 - phi)

  const double* row_one(int c, int j) const {
    return log_one.data() + (static_cast<std::size_t>(c) * p + j) * K;
  }
  const double* row_zero(int c, int j) const {
    return log_zero.data() + (static_cast<std::size_t>(c) * p + j) * K;
  }
};

LogPhiTables build_log_phi(const ModelParams& params);

// Sums Bernoulli log masses of one row into per-(group, class) cells.
// out has r*K entries, laid out group-major; missing symptoms are skipped.
void accumulate_group_logmass(std::span<const std::int8_t> x, int c,
                              const LogPhiTables& tables, std::span<const int> s_row,
                              int r, std::span<double> out);

// Collapses the per-(group, class) log masses over the latent classes.
double ctucker_mix_logmass(const ModelParams& params, int c,
                           std::span<const double> group_logmass);
double gip_mix_logmass(const ModelParams& params, int c,
                       std::span<const double> group_logmass);

// log p(x | cause c) for one row under the given grouping, marginalizing all
// latent classes. Costs O(p*K + h*r*K) instead of the K^r brute sum.
double row_loglik_ctucker(std::span<const std::int8_t> x, int c,
                          const ModelParams& params, std::span<const int> s_row);

// Same for the independent-group family (and the single-group one at r=1).
double row_loglik_gip(std::span<const std::int8_t> x, int c, const ModelParams& params,
                      std::span<const int> s_row);

// Joint class profiles over a set of groups, materialized combination by
// combination. rows = K^m with groups in the requested order, the first
// group varying slowest.
struct ExpandedProfiles {
  int c = 0;
  int K = 0;
  std::vector<int> groups;        // as requested
  std::vector<int> columns;       // symptom ids, blocked by group
  std::vector<int> column_group;  // group of each column
  int rows = 0;
  std::vector<int> combo;         // rows * groups.size() class labels
  std::vector<double> weights;    // rows; sums to 1
  std::vector<double> profiles;   // rows * columns.size() success probabilities
};

// Refuses (CapacityError) when K^m would exceed cap.
ExpandedProfiles expand_profiles(const ModelParams& params, int c,
                                 std::span<const int> groups, std::span<const int> s_row,
                                 std::size_t cap = 4096);

}  // namespace vatensor
