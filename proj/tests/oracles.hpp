// Reference implementations the tests trust instead of the library: plain
// products over the explicit joint density, std::mt19937_64 randomness, no
// shared code with core/ beyond the data types.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "vatensor/types.hpp"

namespace oracle {

inline double log_bern(int x, double prob) {
  return x ? std::log(prob) : std::log(1.0 - prob);
}

inline std::vector<double> dirichlet_row(std::mt19937_64& gen, int K, double conc = 1.0) {
  std::gamma_distribution<double> g(conc, 1.0);
  std::vector<double> out(K);
  double total = 0;
  for (double& v : out) {
    v = g(gen);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

struct Instance {
  vatensor::VADataset data;
  vatensor::LatentState state;
  vatensor::ModelParams params;
};

// Random dataset/state/params tuple with both weight blocks (psi and lambda)
// populated so one instance serves every family.
inline Instance random_instance(std::mt19937_64& gen, int n, int p, int C, int K, int r,
                                int h, double missing_rate = 0.15) {
  namespace va = vatensor;
  Instance inst;
  va::VADataset& d = inst.data;
  d.n = n;
  d.p = p;
  d.C = C;
  d.x.resize(static_cast<std::size_t>(n) * p);
  d.y_obs.resize(n);
  d.domain.resize(n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> cause(0, C - 1);
  for (int i = 0; i < n; ++i) {
    bool labeled = u01(gen) < 0.5;
    d.domain[i] = labeled ? 1 : 0;
    d.y_obs[i] = labeled ? cause(gen) : -1;
    for (int j = 0; j < p; ++j) {
      double roll = u01(gen);
      d.x_at(i, j) = roll < missing_rate ? va::kMissing : (roll < missing_rate + 0.45 ? 0 : 1);
    }
  }

  va::LatentState& st = inst.state;
  st = va::LatentState::sized(n, C, p, r);
  std::uniform_int_distribution<int> zk(0, K - 1), hl(0, h - 1), sg(0, r - 1);
  for (int i = 0; i < n; ++i) {
    st.y[i] = d.y_obs[i] >= 0 ? d.y_obs[i] : cause(gen);
    st.h[i] = hl(gen);
    for (int s = 0; s < r; ++s) st.z_at(i, s) = zk(gen);
  }
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < p; ++j) st.s_at(c, j) = sg(gen);
  }

  va::ModelParams& pr = inst.params;
  pr = va::ModelParams::sized(va::ModelFamily::kCTucker, C, K, r, h, p);
  pr.lambda.resize(static_cast<std::size_t>(C) * r * K);
  pr.pi0 = dirichlet_row(gen, C);
  pr.pi1 = dirichlet_row(gen, C);
  for (int c = 0; c < C; ++c) {
    std::vector<double> row = dirichlet_row(gen, h);
    for (int l = 0; l < h; ++l) pr.nu_at(c, l) = row[l];
    for (int l = 0; l < h; ++l) {
      for (int s = 0; s < r; ++s) {
        row = dirichlet_row(gen, K);
        for (int k = 0; k < K; ++k) pr.psi_at(c, l, s, k) = row[k];
      }
    }
    for (int s = 0; s < r; ++s) {
      row = dirichlet_row(gen, K);
      for (int k = 0; k < K; ++k) pr.lambda_at(c, s, k) = row[k];
    }
    std::vector<double> xi = dirichlet_row(gen, r);
    for (int s = 0; s < r; ++s) pr.xi_at(c, s) = xi[s];
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < p; ++j) pr.phi_at(c, k, j) = 0.05 + 0.90 * u01(gen);
    }
  }
  return inst;
}

// Explicit joint log density of (Y, H, Z, s, X) given the parameters under
// the coupled family's generative story. Parameter priors are omitted; they
// are constant in every conditional the tests enumerate.
inline double log_joint_ct(const Instance& inst) {
  const auto& d = inst.data;
  const auto& st = inst.state;
  const auto& pr = inst.params;
  double lp = 0;
  for (int c = 0; c < d.C; ++c) {
    for (int j = 0; j < d.p; ++j) lp += std::log(pr.xi_at(c, st.s_at(c, j)));
  }
  for (int i = 0; i < d.n; ++i) {
    int c = st.y[i];
    lp += std::log(d.domain[i] ? pr.pi1[c] : pr.pi0[c]);
    lp += std::log(pr.nu_at(c, st.h[i]));
    for (int s = 0; s < st.r; ++s) lp += std::log(pr.psi_at(c, st.h[i], s, st.z_at(i, s)));
    for (int j = 0; j < d.p; ++j) {
      if (d.x_at(i, j) == vatensor::kMissing) continue;
      lp += log_bern(d.x_at(i, j), pr.phi_at(c, st.z_at(i, st.s_at(c, j)), j));
    }
  }
  return lp;
}

// Same story without the upper level: group weights come from lambda.
inline double log_joint_gip(const Instance& inst) {
  const auto& d = inst.data;
  const auto& st = inst.state;
  const auto& pr = inst.params;
  double lp = 0;
  for (int c = 0; c < d.C; ++c) {
    for (int j = 0; j < d.p; ++j) lp += std::log(pr.xi_at(c, st.s_at(c, j)));
  }
  for (int i = 0; i < d.n; ++i) {
    int c = st.y[i];
    lp += std::log(d.domain[i] ? pr.pi1[c] : pr.pi0[c]);
    for (int s = 0; s < st.r; ++s) lp += std::log(pr.lambda_at(c, s, st.z_at(i, s)));
    for (int j = 0; j < d.p; ++j) {
      if (d.x_at(i, j) == vatensor::kMissing) continue;
      lp += log_bern(d.x_at(i, j), pr.phi_at(c, st.z_at(i, st.s_at(c, j)), j));
    }
  }
  return lp;
}

inline std::vector<double> normalize_exp(std::vector<double> logs) {
  double best = logs[0];
  for (double v : logs) best = std::max(best, v);
  double total = 0;
  for (double& v : logs) {
    v = std::exp(v - best);
    total += v;
  }
  for (double& v : logs) v /= total;
  return logs;
}

// Cause conditional for one unlabeled row, marginalizing that row's (H, Z)
// by full enumeration of the joint.
inline std::vector<double> y_cond_ct(Instance inst, int i) {
  const int C = inst.data.C;
  const int K = inst.params.K, r = inst.params.r, h = inst.params.h;
  std::vector<double> logs(C);
  for (int c = 0; c < C; ++c) {
    inst.state.y[i] = c;
    double total = 0;
    double ref = 0;
    bool first = true;
    for (int l = 0; l < h; ++l) {
      inst.state.h[i] = l;
      std::vector<int> kvec(r, 0);
      while (true) {
        for (int s = 0; s < r; ++s) inst.state.z_at(i, s) = kvec[s];
        double lp = log_joint_ct(inst);
        if (first) {
          ref = lp;
          first = false;
        }
        total += std::exp(lp - ref);
        int pos = r - 1;
        while (pos >= 0 && ++kvec[pos] == K) kvec[pos--] = 0;
        if (pos < 0) break;
      }
    }
    logs[c] = ref + std::log(total);
  }
  return normalize_exp(std::move(logs));
}

inline std::vector<double> y_cond_gip(Instance inst, int i) {
  const int C = inst.data.C;
  const int K = inst.params.K, r = inst.params.r;
  std::vector<double> logs(C);
  for (int c = 0; c < C; ++c) {
    inst.state.y[i] = c;
    double total = 0;
    double ref = 0;
    bool first = true;
    std::vector<int> kvec(r, 0);
    while (true) {
      for (int s = 0; s < r; ++s) inst.state.z_at(i, s) = kvec[s];
      double lp = log_joint_gip(inst);
      if (first) {
        ref = lp;
        first = false;
      }
      total += std::exp(lp - ref);
      int pos = r - 1;
      while (pos >= 0 && ++kvec[pos] == K) kvec[pos--] = 0;
      if (pos < 0) break;
    }
    logs[c] = ref + std::log(total);
  }
  return normalize_exp(std::move(logs));
}

// Single-coordinate conditionals: vary one latent, recompute the whole joint.
inline std::vector<double> z_cond_ct(Instance inst, int i, int s) {
  std::vector<double> logs(inst.params.K);
  for (int k = 0; k < inst.params.K; ++k) {
    inst.state.z_at(i, s) = k;
    logs[k] = log_joint_ct(inst);
  }
  return normalize_exp(std::move(logs));
}

inline std::vector<double> z_cond_gip(Instance inst, int i, int s) {
  std::vector<double> logs(inst.params.K);
  for (int k = 0; k < inst.params.K; ++k) {
    inst.state.z_at(i, s) = k;
    logs[k] = log_joint_gip(inst);
  }
  return normalize_exp(std::move(logs));
}

inline std::vector<double> h_cond_ct(Instance inst, int i) {
  std::vector<double> logs(inst.params.h);
  for (int l = 0; l < inst.params.h; ++l) {
    inst.state.h[i] = l;
    logs[l] = log_joint_ct(inst);
  }
  return normalize_exp(std::move(logs));
}

inline std::vector<double> s_cond_ct(Instance inst, int c, int j) {
  std::vector<double> logs(inst.params.r);
  for (int g = 0; g < inst.params.r; ++g) {
    inst.state.s_at(c, j) = g;
    logs[g] = log_joint_ct(inst);
  }
  return normalize_exp(std::move(logs));
}

// Marginal row likelihood by brute force over all K^r class combinations.
inline double row_loglik_naive_ct(const std::vector<std::int8_t>& x, int c,
                                  const vatensor::ModelParams& pr,
                                  const std::vector<int>& s_row) {
  const int K = pr.K, r = pr.r, h = pr.h;
  double total = 0;
  std::vector<int> kvec(r, 0);
  while (true) {
    double weight = 0;
    for (int l = 0; l < h; ++l) {
      double term = pr.nu_at(c, l);
      for (int s = 0; s < r; ++s) term *= pr.psi_at(c, l, s, kvec[s]);
      weight += term;
    }
    double like = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] == vatensor::kMissing) continue;
      double prob = pr.phi_at(c, kvec[s_row[j]], static_cast<int>(j));
      like *= x[j] ? prob : 1.0 - prob;
    }
    total += weight * like;
    int pos = r - 1;
    while (pos >= 0 && ++kvec[pos] == K) kvec[pos--] = 0;
    if (pos < 0) break;
  }
  return std::log(total);
}

inline double row_loglik_naive_gip(const std::vector<std::int8_t>& x, int c,
                                   const vatensor::ModelParams& pr,
                                   const std::vector<int>& s_row) {
  const int K = pr.K, r = pr.r;
  double lp = 0;
  for (int s = 0; s < r; ++s) {
    double group = 0;
    for (int k = 0; k < K; ++k) {
      double term = pr.lambda_at(c, s, k);
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (s_row[j] != s || x[j] == vatensor::kMissing) continue;
        double prob = pr.phi_at(c, k, static_cast<int>(j));
        term *= x[j] ? prob : 1.0 - prob;
      }
      group += term;
    }
    lp += std::log(group);
  }
  return lp;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace oracle
