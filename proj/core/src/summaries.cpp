#include "vatensor/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vatensor/error.hpp"

namespace vatensor {

namespace {

void require_draws(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw Error("no retained sweeps to summarize");
}

// Stable index sort, descending by key, ascending index on ties.
std::vector<int> order_desc(const double* keys, int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return keys[a] > keys[b]; });
  return idx;
}

}  // namespace

GroupUtilization group_utilization(const PosteriorDraws& draws) {
  require_draws(draws);
  if (!draws.store_s || draws.draws.front().s.empty()) {
    throw Error("group utilization needs stored grouping draws (store_s)");
  }
  const int C = draws.C, r = draws.r, p = draws.p;
  GroupUtilization out;
  out.C = C;
  out.r = r;
  out.fraction.assign(static_cast<std::size_t>(C) * r, 0.0);

  std::vector<std::uint8_t> used(static_cast<std::size_t>(C) * r);
  for (const ParamSnapshot& snap : draws.draws) {
    std::fill(used.begin(), used.end(), 0);
    for (int c = 0; c < C; ++c) {
      for (int j = 0; j < p; ++j) {
        used[static_cast<std::size_t>(c) * r + snap.s[static_cast<std::size_t>(c) * p + j]] = 1;
      }
    }
    for (std::size_t b = 0; b < used.size(); ++b) out.fraction[b] += used[b];
  }
  const double m = static_cast<double>(draws.retained());
  for (double& f : out.fraction) f /= m;

  out.average.assign(static_cast<std::size_t>(r), 0.0);
  for (int c = 0; c < C; ++c) {
    for (int g = 0; g < r; ++g) out.average[static_cast<std::size_t>(g)] += out.fraction[static_cast<std::size_t>(c) * r + g];
  }
  for (double& a : out.average) a /= static_cast<double>(C);

  out.order.resize(static_cast<std::size_t>(C) * r);
  for (int c = 0; c < C; ++c) {
    std::vector<int> idx = order_desc(out.fraction.data() + static_cast<std::size_t>(c) * r, r);
    std::copy(idx.begin(), idx.end(), out.order.begin() + static_cast<std::size_t>(c) * r);
  }
  return out;
}

ClassUtilization class_utilization(const PosteriorDraws& draws) {
  require_draws(draws);
  const int C = draws.C, r = draws.r, K = draws.K;
  if (draws.draws.front().class_occ.size() != static_cast<std::size_t>(C) * r * K) {
    throw Error("class occupancy records are missing or misshapen");
  }
  ClassUtilization out;
  out.C = C;
  out.r = r;
  out.K = K;
  out.fraction.assign(static_cast<std::size_t>(C) * r * K, 0.0);
  for (const ParamSnapshot& snap : draws.draws) {
    for (std::size_t b = 0; b < out.fraction.size(); ++b) out.fraction[b] += snap.class_occ[b];
  }
  const double m = static_cast<double>(draws.retained());
  for (double& f : out.fraction) f /= m;

  out.order.resize(out.fraction.size());
  for (int c = 0; c < C; ++c) {
    for (int g = 0; g < r; ++g) {
      const std::size_t base = (static_cast<std::size_t>(c) * r + g) * K;
      std::vector<int> idx = order_desc(out.fraction.data() + base, K);
      std::copy(idx.begin(), idx.end(), out.order.begin() + base);
    }
  }
  return out;
}

RSelection select_r(const GroupUtilization& util, double threshold, double coverage) {
  RSelection out;
  out.threshold = threshold;
  out.coverage = coverage;

  std::vector<double> sorted = util.average;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  int above = 0;
  for (double a : sorted) {
    if (a > threshold) ++above;
  }
  out.by_threshold = std::max(1, above);

  double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  if (total <= 0.0) {
    out.by_coverage = 1;
  } else {
    double acc = 0.0;
    int k = 0;
    while (k < static_cast<int>(sorted.size()) && acc < coverage * total - 1e-12) {
      acc += sorted[static_cast<std::size_t>(k)];
      ++k;
    }
    out.by_coverage = std::max(1, k);
  }
  out.recommended = out.by_threshold;
  return out;
}

KSelection select_k(const ClassUtilization& util, double threshold, double coverage) {
  KSelection out;
  out.threshold = threshold;
  out.coverage = coverage;

  // Above-threshold class counts per (cause, group). Within a cell the
  // above-threshold classes are exactly the top-ranked ones.
  const int cells = util.C * util.r;
  std::vector<int> m(static_cast<std::size_t>(cells), 0);
  long total = 0;
  for (int cell = 0; cell < cells; ++cell) {
    const double* f = util.fraction.data() + static_cast<std::size_t>(cell) * util.K;
    for (int k = 0; k < util.K; ++k) {
      if (f[k] > threshold) ++m[static_cast<std::size_t>(cell)];
    }
    total += m[static_cast<std::size_t>(cell)];
  }
  out.above_threshold = static_cast<int>(total);
  if (total == 0) {
    out.recommended = 1;
    out.achieved = 1.0;
    return out;
  }
  for (int k0 = 1; k0 <= util.K; ++k0) {
    long captured = 0;
    for (int cell = 0; cell < cells; ++cell) captured += std::min(k0, m[static_cast<std::size_t>(cell)]);
    double share = static_cast<double>(captured) / static_cast<double>(total);
    if (share >= coverage - 1e-12 || k0 == util.K) {
      out.recommended = k0;
      out.achieved = share;
      break;
    }
  }
  return out;
}

std::vector<double> group_class_weights(const ModelParams& params, int c) {
  if (c < 0 || c >= params.C) throw DimensionError("cause index out of range");
  const int K = params.K, r = params.r, h = params.h;
  std::vector<double> w(static_cast<std::size_t>(r) * K, 0.0);
  if (!params.psi.empty()) {
    for (int l = 0; l < h; ++l) {
      const double vl = params.nu_at(c, l);
      for (int s = 0; s < r; ++s) {
        for (int k = 0; k < K; ++k) w[static_cast<std::size_t>(s) * K + k] += vl * params.psi_at(c, l, s, k);
      }
    }
  } else {
    for (int s = 0; s < r; ++s) {
      for (int k = 0; k < K; ++k) w[static_cast<std::size_t>(s) * K + k] = params.lambda_at(c, s, k);
    }
  }
  return w;
}

SymptomTopics symptom_topics(const PosteriorDraws& draws, const VADataset& data, int c,
                             int top_m) {
  require_draws(draws);
  if (!draws.store_s || draws.draws.front().s.empty()) {
    throw Error("symptom topics need stored grouping draws (store_s)");
  }
  if (c < 0 || c >= draws.C) throw DimensionError("cause index out of range");
  if (data.p != draws.p) throw DimensionError("dataset does not match the fit");

  const int r = draws.r, p = draws.p;
  SymptomTopics out;
  out.c = c;
  out.r = r;
  out.p = p;
  out.top_m = top_m;

  // Empirical symptom rates among labeled rows of this cause.
  out.empirical.assign(static_cast<std::size_t>(p), 0.0);
  std::vector<int> denom(static_cast<std::size_t>(p), 0);
  for (int i = 0; i < data.n; ++i) {
    if (data.domain[static_cast<std::size_t>(i)] != 1 || data.y_obs[static_cast<std::size_t>(i)] != c) continue;
    for (int j = 0; j < p; ++j) {
      std::int8_t v = data.x_at(i, j);
      if (v == kMissing) continue;
      ++denom[static_cast<std::size_t>(j)];
      if (v != 0) out.empirical[static_cast<std::size_t>(j)] += 1.0;
    }
  }
  for (int j = 0; j < p; ++j) {
    if (denom[static_cast<std::size_t>(j)] > 0) out.empirical[static_cast<std::size_t>(j)] /= denom[static_cast<std::size_t>(j)];
  }

  // Marginal posterior mode of the group assignment per symptom.
  std::vector<int> counts(static_cast<std::size_t>(p) * r, 0);
  for (const ParamSnapshot& snap : draws.draws) {
    for (int j = 0; j < p; ++j) {
      ++counts[static_cast<std::size_t>(j) * r + snap.s[static_cast<std::size_t>(c) * p + j]];
    }
  }
  out.mode_group.resize(static_cast<std::size_t>(p));
  out.mode_prob.resize(static_cast<std::size_t>(p));
  const double m = static_cast<double>(draws.retained());
  for (int j = 0; j < p; ++j) {
    int best = 0;
    for (int g = 1; g < r; ++g) {
      if (counts[static_cast<std::size_t>(j) * r + g] > counts[static_cast<std::size_t>(j) * r + best]) best = g;
    }
    out.mode_group[static_cast<std::size_t>(j)] = best;
    out.mode_prob[static_cast<std::size_t>(j)] = counts[static_cast<std::size_t>(j) * r + best] / m;
  }

  // Groups ordered by decreasing average empirical rate of their symptoms.
  std::vector<double> group_rate(static_cast<std::size_t>(r), -1.0);
  std::vector<int> group_n(static_cast<std::size_t>(r), 0);
  for (int j = 0; j < p; ++j) {
    int g = out.mode_group[static_cast<std::size_t>(j)];
    if (group_n[static_cast<std::size_t>(g)] == 0) group_rate[static_cast<std::size_t>(g)] = 0.0;
    group_rate[static_cast<std::size_t>(g)] += out.empirical[static_cast<std::size_t>(j)];
    ++group_n[static_cast<std::size_t>(g)];
  }
  for (int g = 0; g < r; ++g) {
    if (group_n[static_cast<std::size_t>(g)] > 0) group_rate[static_cast<std::size_t>(g)] /= group_n[static_cast<std::size_t>(g)];
  }
  out.group_order = order_desc(group_rate.data(), r);

  // Every symptom exactly once: blocked by group order, ranked inside.
  out.ranked.reserve(static_cast<std::size_t>(p));
  for (int g : out.group_order) {
    std::vector<int> members;
    for (int j = 0; j < p; ++j) {
      if (out.mode_group[static_cast<std::size_t>(j)] == g) members.push_back(j);
    }
    std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
      if (out.mode_prob[static_cast<std::size_t>(a)] != out.mode_prob[static_cast<std::size_t>(b)]) {
        return out.mode_prob[static_cast<std::size_t>(a)] > out.mode_prob[static_cast<std::size_t>(b)];
      }
      return out.empirical[static_cast<std::size_t>(a)] > out.empirical[static_cast<std::size_t>(b)];
    });
    out.ranked.insert(out.ranked.end(), members.begin(), members.end());
  }
  return out;
}

CauseProbs individual_cause_probs(const PosteriorDraws& draws) {
  require_draws(draws);
  const int C = draws.C;
  const std::size_t T = draws.target_rows.size();
  if (T > 0 && draws.y_prob_sum.size() != T * static_cast<std::size_t>(C)) {
    throw Error("cause-mass accumulators are unavailable for these draws");
  }
  CauseProbs out;
  out.C = C;
  out.rows = draws.target_rows;
  out.mean.resize(T * static_cast<std::size_t>(C));
  out.freq.resize(T * static_cast<std::size_t>(C));
  out.top.resize(T);
  const double m = static_cast<double>(draws.retained());
  for (std::size_t t = 0; t < T; ++t) {
    int best = 0;
    for (int c = 0; c < C; ++c) {
      const std::size_t at = t * static_cast<std::size_t>(C) + static_cast<std::size_t>(c);
      out.mean[at] = draws.y_prob_sum[at] / m;
      out.freq[at] = static_cast<double>(draws.y_draw_count[at]) / m;
      if (out.mean[at] > out.mean[t * static_cast<std::size_t>(C) + static_cast<std::size_t>(best)]) best = c;
    }
    out.top[t] = best;
  }
  return out;
}

CsmfEstimate csmf_estimate(const PosteriorDraws& draws, double level) {
  require_draws(draws);
  if (!(level > 0.0 && level < 1.0)) throw DimensionError("interval level must be in (0,1)");
  const int C = draws.C;
  const int m = draws.retained();
  CsmfEstimate out;
  out.level = level;
  out.mean.assign(static_cast<std::size_t>(C), 0.0);
  out.lower.resize(static_cast<std::size_t>(C));
  out.upper.resize(static_cast<std::size_t>(C));

  std::vector<double> column(static_cast<std::size_t>(m));
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(m - 1);
    int lo = static_cast<int>(std::floor(pos));
    int hi = std::min(lo + 1, m - 1);
    double w = pos - lo;
    return (1.0 - w) * column[static_cast<std::size_t>(lo)] + w * column[static_cast<std::size_t>(hi)];
  };

  for (int c = 0; c < C; ++c) {
    for (int t = 0; t < m; ++t) column[static_cast<std::size_t>(t)] = draws.draws[static_cast<std::size_t>(t)].pi0[static_cast<std::size_t>(c)];
    for (double v : column) out.mean[static_cast<std::size_t>(c)] += v;
    out.mean[static_cast<std::size_t>(c)] /= static_cast<double>(m);
    std::sort(column.begin(), column.end());
    out.lower[static_cast<std::size_t>(c)] = quantile((1.0 - level) / 2.0);
    out.upper[static_cast<std::size_t>(c)] = quantile(1.0 - (1.0 - level) / 2.0);
  }
  return out;
}

int map_sweep(const PosteriorDraws& draws) {
  require_draws(draws);
  int best = 0;
  for (int t = 1; t < draws.retained(); ++t) {
    if (draws.draws[static_cast<std::size_t>(t)].joint_logp >
        draws.draws[static_cast<std::size_t>(best)].joint_logp) {
      best = t;
    }
  }
  return best;
}

ModelParams snapshot_params(const PosteriorDraws& draws, int index) {
  require_draws(draws);
  if (index < 0 || index >= draws.retained()) throw DimensionError("sweep index out of range");
  const ParamSnapshot& snap = draws.draws[static_cast<std::size_t>(index)];
  ModelParams params = ModelParams::sized(draws.family, draws.C, draws.K, draws.r,
                                          draws.h, draws.p);
  params.pi0 = snap.pi0;
  params.pi1 = snap.pi1;
  params.xi = snap.xi;
  if (draws.family == ModelFamily::kCTucker) {
    params.nu = snap.nu;
    params.psi = snap.psi;
  } else {
    params.lambda = snap.lambda;
  }
  if (!snap.phi.empty()) {
    params.phi = snap.phi;
  } else {
    params.phi.clear();
  }
  return params;
}

}  // namespace vatensor
