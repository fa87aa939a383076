#include "vatensor/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "vatensor/error.hpp"
#include "vatensor/likelihood.hpp"
#include "vatensor/log.hpp"
#include "vatensor/numeric.hpp"
#include "vatensor/rng.hpp"

namespace vatensor {

namespace {

// Step codes for substream keys. Shared across families; the weight-table
// update slot is reused by psi and lambda since a chain has one or the other.
enum : std::uint64_t {
  kStepInit = 0,
  kStepY = 1,
  kStepZ = 2,
  kStepH = 3,
  kStepPi = 4,
  kStepNu = 5,
  kStepPsi = 6,
  kStepPhi = 7,
  kStepS = 8,
  kStepXi = 9
};

std::uint64_t init_unit(std::uint64_t block, std::uint64_t idx) {
  return (block << 32) + idx;
}

// Static contiguous partition of [0, n). Worker w handles one chunk, each
// unit derives its own substream, so the schedule never shows in the output.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int workers = std::min(threads, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error = nullptr;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi]() {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(first_error);
}

std::vector<double> log_vec(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(v[i]);
  return out;
}

std::vector<int> unlabeled_rows(const VADataset& data) {
  std::vector<int> rows;
  for (int i = 0; i < data.n; ++i) {
    if (data.domain[i] == 0) rows.push_back(i);
  }
  return rows;
}

// Symptom lists per (cause, group) for the current grouping.
struct GroupIndex {
  int C = 0, r = 0;
  std::vector<int> items;    // C*p symptom ids, blocked by (c, s)
  std::vector<int> offsets;  // C*r + 1

  static GroupIndex build(const LatentState& state) {
    GroupIndex gi;
    gi.C = state.C;
    gi.r = state.r;
    std::vector<int> counts(static_cast<std::size_t>(state.C) * state.r, 0);
    for (int c = 0; c < state.C; ++c) {
      for (int j = 0; j < state.p; ++j) ++counts[static_cast<std::size_t>(c) * state.r + state.s_at(c, j)];
    }
    gi.offsets.assign(static_cast<std::size_t>(state.C) * state.r + 1, 0);
    for (std::size_t b = 0; b < counts.size(); ++b) gi.offsets[b + 1] = gi.offsets[b] + counts[b];
    gi.items.resize(static_cast<std::size_t>(state.C) * state.p);
    std::vector<int> cursor(gi.offsets.begin(), gi.offsets.end() - 1);
    for (int c = 0; c < state.C; ++c) {
      for (int j = 0; j < state.p; ++j) {
        std::size_t b = static_cast<std::size_t>(c) * state.r + state.s_at(c, j);
        gi.items[static_cast<std::size_t>(cursor[b]++)] = j;
      }
    }
    return gi;
  }

  std::span<const int> list(int c, int s) const {
    std::size_t b = static_cast<std::size_t>(c) * r + s;
    return {items.data() + offsets[b], static_cast<std::size_t>(offsets[b + 1] - offsets[b])};
  }
};

// Prior fallback when a conditional underflows to zero mass everywhere.
// Warn a few times, then go quiet.
void note_fallbacks(const char* step, long count, int iteration) {
  if (count <= 0) return;
  static std::atomic<int> warned{0};
  int seen = warned.fetch_add(1);
  if (seen < 8) {
    log::warn(std::string(step) + ": " + std::to_string(count) +
              " conditional(s) underflowed at iteration " + std::to_string(iteration) +
              "; fell back to the prior");
  } else if (seen == 8) {
    log::warn("further underflow fallback warnings suppressed");
  }
}

// Unnormalized cause log weights for one unlabeled row (coupled family).
void y_logweights_ct(const VADataset& data, int i, const ModelParams& P,
                     const LatentState& state, const LogPhiTables& tables,
                     const std::vector<double>& log_pi0, const std::vector<double>& log_nu,
                     const std::vector<double>& log_psi, std::span<double> logw,
                     std::span<double> mass, std::span<double> kbuf,
                     std::span<double> lbuf) {
  const int K = P.K, r = P.r, h = P.h;
  std::span<const std::int8_t> x(data.x.data() + static_cast<std::size_t>(i) * data.p,
                                 static_cast<std::size_t>(data.p));
  for (int c = 0; c < P.C; ++c) {
    std::span<const int> s_row(state.s.data() + static_cast<std::size_t>(c) * state.p,
                               static_cast<std::size_t>(state.p));
    accumulate_group_logmass(x, c, tables, s_row, r, mass);
    for (int l = 0; l < h; ++l) {
      const double* lp = log_psi.data() + ((static_cast<std::size_t>(c) * h + l) * r) * K;
      double acc = log_nu[static_cast<std::size_t>(c) * h + l];
      for (int s = 0; s < r; ++s) {
        for (int k = 0; k < K; ++k) kbuf[k] = lp[s * K + k] + mass[s * K + k];
        acc += log_sum_exp(kbuf.data(), static_cast<std::size_t>(K));
      }
      lbuf[l] = acc;
    }
    logw[c] = log_pi0[c] + log_sum_exp(lbuf.data(), static_cast<std::size_t>(h));
  }
}

// Same for the independent-group families.
void y_logweights_gip(const VADataset& data, int i, const ModelParams& P,
                      const LatentState& state, const LogPhiTables& tables,
                      const std::vector<double>& log_pi0,
                      const std::vector<double>& log_lambda, std::span<double> logw,
                      std::span<double> mass, std::span<double> kbuf) {
  const int K = P.K, r = P.r;
  std::span<const std::int8_t> x(data.x.data() + static_cast<std::size_t>(i) * data.p,
                                 static_cast<std::size_t>(data.p));
  for (int c = 0; c < P.C; ++c) {
    std::span<const int> s_row(state.s.data() + static_cast<std::size_t>(c) * state.p,
                               static_cast<std::size_t>(state.p));
    accumulate_group_logmass(x, c, tables, s_row, r, mass);
    double total = log_pi0[c];
    for (int s = 0; s < r; ++s) {
      const double* ll = log_lambda.data() + (static_cast<std::size_t>(c) * r + s) * K;
      for (int k = 0; k < K; ++k) kbuf[k] = ll[k] + mass[s * K + k];
      total += log_sum_exp(kbuf.data(), static_cast<std::size_t>(K));
    }
    logw[c] = total;
  }
}

std::vector<double> effective_alpha(const ModelConfig& config) {
  if (!config.alpha.empty()) return config.alpha;
  return std::vector<double>(static_cast<std::size_t>(config.C), 1.0);
}

std::vector<double> effective_dir_psi(const ModelConfig& config) {
  if (!config.dir_psi.empty()) return config.dir_psi;
  return std::vector<double>(static_cast<std::size_t>(config.K), 1.0);
}

}  // namespace

std::vector<double> y_conditional(const VADataset& data, int i, const LatentState& state,
                                  const ModelParams& params) {
  LogPhiTables tables = build_log_phi(params);
  std::vector<double> log_pi0 = log_vec(params.pi0);
  std::vector<double> log_nu = log_vec(params.nu);
  std::vector<double> log_psi = log_vec(params.psi);
  std::vector<double> logw(static_cast<std::size_t>(params.C));
  std::vector<double> mass(static_cast<std::size_t>(params.r) * params.K);
  std::vector<double> kbuf(static_cast<std::size_t>(params.K));
  std::vector<double> lbuf(static_cast<std::size_t>(params.h));
  y_logweights_ct(data, i, params, state, tables, log_pi0, log_nu, log_psi, logw, mass,
                  kbuf, lbuf);
  if (!normalize_log_weights(logw)) return params.pi0;
  return logw;
}

std::vector<double> y_conditional_gip(const VADataset& data, int i,
                                      const LatentState& state, const ModelParams& params) {
  LogPhiTables tables = build_log_phi(params);
  std::vector<double> log_pi0 = log_vec(params.pi0);
  std::vector<double> log_lambda = log_vec(params.lambda);
  std::vector<double> logw(static_cast<std::size_t>(params.C));
  std::vector<double> mass(static_cast<std::size_t>(params.r) * params.K);
  std::vector<double> kbuf(static_cast<std::size_t>(params.K));
  y_logweights_gip(data, i, params, state, tables, log_pi0, log_lambda, logw, mass, kbuf);
  if (!normalize_log_weights(logw)) return params.pi0;
  return logw;
}

std::vector<double> z_conditional(const VADataset& data, int i, int s,
                                  const LatentState& state, const ModelParams& params) {
  const int K = params.K;
  const int c = state.y[i];
  const int l = state.h[i];
  std::vector<double> logw(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) logw[k] = std::log(params.psi_at(c, l, s, k));
  for (int j = 0; j < data.p; ++j) {
    if (state.s_at(c, j) != s) continue;
    std::int8_t v = data.x_at(i, j);
    if (v == kMissing) continue;
    for (int k = 0; k < K; ++k) logw[k] += log_bernoulli(v, params.phi_at(c, k, j));
  }
  if (!normalize_log_weights(logw)) {
    std::vector<double> prior(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) prior[k] = params.psi_at(c, l, s, k);
    return prior;
  }
  return logw;
}

std::vector<double> z_conditional_gip(const VADataset& data, int i, int s,
                                      const LatentState& state, const ModelParams& params) {
  const int K = params.K;
  const int c = state.y[i];
  std::vector<double> logw(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) logw[k] = std::log(params.lambda_at(c, s, k));
  for (int j = 0; j < data.p; ++j) {
    if (state.s_at(c, j) != s) continue;
    std::int8_t v = data.x_at(i, j);
    if (v == kMissing) continue;
    for (int k = 0; k < K; ++k) logw[k] += log_bernoulli(v, params.phi_at(c, k, j));
  }
  if (!normalize_log_weights(logw)) {
    std::vector<double> prior(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) prior[k] = params.lambda_at(c, s, k);
    return prior;
  }
  return logw;
}

std::vector<double> h_conditional(int i, const LatentState& state,
                                  const ModelParams& params) {
  const int c = state.y[i];
  std::vector<double> logw(static_cast<std::size_t>(params.h));
  for (int l = 0; l < params.h; ++l) {
    double acc = std::log(params.nu_at(c, l));
    for (int s = 0; s < params.r; ++s) {
      acc += std::log(params.psi_at(c, l, s, state.z_at(i, s)));
    }
    logw[l] = acc;
  }
  if (!normalize_log_weights(logw)) {
    std::vector<double> prior(static_cast<std::size_t>(params.h));
    for (int l = 0; l < params.h; ++l) prior[l] = params.nu_at(c, l);
    return prior;
  }
  return logw;
}

std::vector<double> s_conditional(const VADataset& data, int c, int j,
                                  const LatentState& state, const ModelParams& params) {
  std::vector<double> logw(static_cast<std::size_t>(params.r));
  for (int cand = 0; cand < params.r; ++cand) {
    double acc = std::log(params.xi_at(c, cand));
    for (int i = 0; i < data.n; ++i) {
      if (state.y[i] != c) continue;
      std::int8_t v = data.x_at(i, j);
      if (v == kMissing) continue;
      acc += log_bernoulli(v, params.phi_at(c, state.z_at(i, cand), j));
    }
    logw[cand] = acc;
  }
  if (!normalize_log_weights(logw)) {
    std::vector<double> prior(static_cast<std::size_t>(params.r));
    for (int cand = 0; cand < params.r; ++cand) prior[cand] = params.xi_at(c, cand);
    return prior;
  }
  return logw;
}

void sample_y(const VADataset& data, const ModelParams& params, LatentState& state,
              std::uint64_t seed, int iteration, int threads, YAccumulator* acc) {
  const int C = params.C;
  std::vector<int> rows = unlabeled_rows(data);
  if (rows.empty()) return;
  LogPhiTables tables = build_log_phi(params);
  std::vector<double> log_pi0 = log_vec(params.pi0);
  std::vector<double> log_nu = log_vec(params.nu);
  std::vector<double> log_psi = log_vec(params.psi);
  std::atomic<long> fallbacks{0};
  parallel_for(static_cast<int>(rows.size()), threads, [&](int t) {
    int i = rows[static_cast<std::size_t>(t)];
    Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepY,
                      static_cast<std::uint64_t>(i));
    std::vector<double> logw(static_cast<std::size_t>(C));
    std::vector<double> mass(static_cast<std::size_t>(params.r) * params.K);
    std::vector<double> kbuf(static_cast<std::size_t>(params.K));
    std::vector<double> lbuf(static_cast<std::size_t>(params.h));
    y_logweights_ct(data, i, params, state, tables, log_pi0, log_nu, log_psi, logw, mass,
                    kbuf, lbuf);
    bool underflow = false;
    int c = rng.categorical_from_log(logw, &underflow);
    const std::vector<double>& masses = underflow ? params.pi0 : logw;
    if (underflow) {
      c = rng.categorical(params.pi0);
      fallbacks.fetch_add(1);
    }
    state.y[i] = c;
    if (acc != nullptr) {
      double* ps = acc->prob_sum->data() + static_cast<std::size_t>(t) * C;
      for (int cc = 0; cc < C; ++cc) ps[cc] += masses[static_cast<std::size_t>(cc)];
      ++(*acc->draw_count)[static_cast<std::size_t>(t) * C + c];
    }
  });
  note_fallbacks("cause update", fallbacks.load(), iteration);
}

void sample_y_gip(const VADataset& data, const ModelParams& params, LatentState& state,
                  std::uint64_t seed, int iteration, int threads, YAccumulator* acc) {
  const int C = params.C;
  std::vector<int> rows = unlabeled_rows(data);
  if (rows.empty()) return;
  LogPhiTables tables = build_log_phi(params);
  std::vector<double> log_pi0 = log_vec(params.pi0);
  std::vector<double> log_lambda = log_vec(params.lambda);
  std::atomic<long> fallbacks{0};
  parallel_for(static_cast<int>(rows.size()), threads, [&](int t) {
    int i = rows[static_cast<std::size_t>(t)];
    Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepY,
                      static_cast<std::uint64_t>(i));
    std::vector<double> logw(static_cast<std::size_t>(C));
    std::vector<double> mass(static_cast<std::size_t>(params.r) * params.K);
    std::vector<double> kbuf(static_cast<std::size_t>(params.K));
    y_logweights_gip(data, i, params, state, tables, log_pi0, log_lambda, logw, mass,
                     kbuf);
    bool underflow = false;
    int c = rng.categorical_from_log(logw, &underflow);
    const std::vector<double>& masses = underflow ? params.pi0 : logw;
    if (underflow) {
      c = rng.categorical(params.pi0);
      fallbacks.fetch_add(1);
    }
    state.y[i] = c;
    if (acc != nullptr) {
      double* ps = acc->prob_sum->data() + static_cast<std::size_t>(t) * C;
      for (int cc = 0; cc < C; ++cc) ps[cc] += masses[static_cast<std::size_t>(cc)];
      ++(*acc->draw_count)[static_cast<std::size_t>(t) * C + c];
    }
  });
  note_fallbacks("cause update", fallbacks.load(), iteration);
}

void sample_z(const VADataset& data, const ModelParams& params, LatentState& state,
              std::uint64_t seed, int iteration, int threads) {
  const int K = params.K, r = params.r;
  LogPhiTables tables = build_log_phi(params);
  std::vector<double> log_psi = log_vec(params.psi);
  GroupIndex gi = GroupIndex::build(state);
  std::atomic<long> fallbacks{0};
  parallel_for(state.n, threads, [&](int i) {
    const int c = state.y[i];
    const int l = state.h[i];
    std::vector<double> logw(static_cast<std::size_t>(K));
    for (int s = 0; s < r; ++s) {
      Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepZ,
                        static_cast<std::uint64_t>(i) * r + s);
      const double* lp =
          log_psi.data() + ((static_cast<std::size_t>(c) * params.h + l) * r + s) * K;
      for (int k = 0; k < K; ++k) logw[static_cast<std::size_t>(k)] = lp[k];
      for (int j : gi.list(c, s)) {
        std::int8_t v = data.x_at(i, j);
        if (v == kMissing) continue;
        const double* row = v != 0 ? tables.row_one(c, j) : tables.row_zero(c, j);
        for (int k = 0; k < K; ++k) logw[static_cast<std::size_t>(k)] += row[k];
      }
      bool underflow = false;
      int k = rng.categorical_from_log(logw, &underflow);
      if (underflow) {
        std::span<const double> prior(
            params.psi.data() + ((static_cast<std::size_t>(c) * params.h + l) * r + s) * K,
            static_cast<std::size_t>(K));
        k = rng.categorical(prior);
        fallbacks.fetch_add(1);
      }
      state.z_at(i, s) = k;
    }
  });
  note_fallbacks("class update", fallbacks.load(), iteration);
}

void sample_z_gip(const VADataset& data, const ModelParams& params, LatentState& state,
                  std::uint64_t seed, int iteration, int threads) {
  const int K = params.K, r = params.r;
  LogPhiTables tables = build_log_phi(params);
  std::vector<double> log_lambda = log_vec(params.lambda);
  GroupIndex gi = GroupIndex::build(state);
  std::atomic<long> fallbacks{0};
  parallel_for(state.n, threads, [&](int i) {
    const int c = state.y[i];
    std::vector<double> logw(static_cast<std::size_t>(K));
    for (int s = 0; s < r; ++s) {
      Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepZ,
                        static_cast<std::uint64_t>(i) * r + s);
      const double* ll = log_lambda.data() + (static_cast<std::size_t>(c) * r + s) * K;
      for (int k = 0; k < K; ++k) logw[static_cast<std::size_t>(k)] = ll[k];
      for (int j : gi.list(c, s)) {
        std::int8_t v = data.x_at(i, j);
        if (v == kMissing) continue;
        const double* row = v != 0 ? tables.row_one(c, j) : tables.row_zero(c, j);
        for (int k = 0; k < K; ++k) logw[static_cast<std::size_t>(k)] += row[k];
      }
      bool underflow = false;
      int k = rng.categorical_from_log(logw, &underflow);
      if (underflow) {
        std::span<const double> prior(
            params.lambda.data() + (static_cast<std::size_t>(c) * r + s) * K,
            static_cast<std::size_t>(K));
        k = rng.categorical(prior);
        fallbacks.fetch_add(1);
      }
      state.z_at(i, s) = k;
    }
  });
  note_fallbacks("class update", fallbacks.load(), iteration);
}

void sample_h(const ModelParams& params, LatentState& state, std::uint64_t seed,
              int iteration, int threads) {
  const int h = params.h, r = params.r;
  std::vector<double> log_nu = log_vec(params.nu);
  std::vector<double> log_psi = log_vec(params.psi);
  std::atomic<long> fallbacks{0};
  parallel_for(state.n, threads, [&](int i) {
    Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepH,
                      static_cast<std::uint64_t>(i));
    const int c = state.y[i];
    std::vector<double> logw(static_cast<std::size_t>(h));
    for (int l = 0; l < h; ++l) {
      double acc = log_nu[static_cast<std::size_t>(c) * h + l];
      const double* lp =
          log_psi.data() + ((static_cast<std::size_t>(c) * h + l) * r) * params.K;
      for (int s = 0; s < r; ++s) acc += lp[s * params.K + state.z_at(i, s)];
      logw[static_cast<std::size_t>(l)] = acc;
    }
    bool underflow = false;
    int l = rng.categorical_from_log(logw, &underflow);
    if (underflow) {
      std::span<const double> prior(params.nu.data() + static_cast<std::size_t>(c) * h,
                                    static_cast<std::size_t>(h));
      l = rng.categorical(prior);
      fallbacks.fetch_add(1);
    }
    state.h[i] = l;
  });
  note_fallbacks("profile update", fallbacks.load(), iteration);
}

void sample_pi(const VADataset& data, const LatentState& state, const ModelConfig& config,
               std::uint64_t seed, int iteration, ModelParams& params) {
  const int C = config.C;
  std::vector<double> alpha = effective_alpha(config);
  for (int g = 0; g < 2; ++g) {
    std::vector<double> conc = alpha;
    for (int i = 0; i < state.n; ++i) {
      if (data.domain[i] == g) conc[static_cast<std::size_t>(state.y[i])] += 1.0;
    }
    Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepPi,
                      static_cast<std::uint64_t>(g));
    std::span<double> out(g == 0 ? params.pi0.data() : params.pi1.data(),
                          static_cast<std::size_t>(C));
    rng.dirichlet(conc, out);
  }
}

void sample_nu(const LatentState& state, const ModelConfig& config, std::uint64_t seed,
               int iteration, ModelParams& params) {
  const int C = config.C, h = config.h;
  std::vector<double> counts(static_cast<std::size_t>(C) * h, 0.0);
  for (int i = 0; i < state.n; ++i) {
    counts[static_cast<std::size_t>(state.y[i]) * h + state.h[i]] += 1.0;
  }
  const double prior = 1.0 / static_cast<double>(h);
  std::vector<double> conc(static_cast<std::size_t>(h));
  for (int c = 0; c < C; ++c) {
    for (int l = 0; l < h; ++l) conc[static_cast<std::size_t>(l)] = prior + counts[static_cast<std::size_t>(c) * h + l];
    Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepNu,
                      static_cast<std::uint64_t>(c));
    rng.dirichlet(conc, std::span<double>(params.nu.data() + static_cast<std::size_t>(c) * h,
                                          static_cast<std::size_t>(h)));
  }
}

void sample_psi(const LatentState& state, const ModelConfig& config, std::uint64_t seed,
                int iteration, ModelParams& params) {
  const int C = config.C, K = config.K, r = config.r, h = config.h;
  std::vector<double> counts(static_cast<std::size_t>(C) * h * r * K, 0.0);
  for (int i = 0; i < state.n; ++i) {
    const std::size_t base =
        (static_cast<std::size_t>(state.y[i]) * h + state.h[i]) * static_cast<std::size_t>(r);
    for (int s = 0; s < r; ++s) counts[(base + s) * K + state.z_at(i, s)] += 1.0;
  }
  std::vector<double> b = effective_dir_psi(config);
  std::vector<double> conc(static_cast<std::size_t>(K));
  for (int c = 0; c < C; ++c) {
    for (int l = 0; l < h; ++l) {
      for (int s = 0; s < r; ++s) {
        const std::size_t row = (static_cast<std::size_t>(c) * h + l) * r + s;
        for (int k = 0; k < K; ++k) conc[static_cast<std::size_t>(k)] = b[static_cast<std::size_t>(k)] + counts[row * K + k];
        Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepPsi, row);
        rng.dirichlet(conc, std::span<double>(params.psi.data() + row * K,
                                              static_cast<std::size_t>(K)));
      }
    }
  }
}

void sample_lambda(const LatentState& state, const ModelConfig& config, std::uint64_t seed,
                   int iteration, ModelParams& params) {
  const int C = config.C, K = config.K, r = config.r;
  std::vector<double> counts(static_cast<std::size_t>(C) * r * K, 0.0);
  for (int i = 0; i < state.n; ++i) {
    const std::size_t base = static_cast<std::size_t>(state.y[i]) * r;
    for (int s = 0; s < r; ++s) counts[(base + s) * K + state.z_at(i, s)] += 1.0;
  }
  std::vector<double> b = effective_dir_psi(config);
  std::vector<double> conc(static_cast<std::size_t>(K));
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < r; ++s) {
      const std::size_t row = static_cast<std::size_t>(c) * r + s;
      for (int k = 0; k < K; ++k) conc[static_cast<std::size_t>(k)] = b[static_cast<std::size_t>(k)] + counts[row * K + k];
      Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepPsi, row);
      rng.dirichlet(conc, std::span<double>(params.lambda.data() + row * K,
                                            static_cast<std::size_t>(K)));
    }
  }
}

void sample_phi(const VADataset& data, const LatentState& state, const ModelConfig& config,
                std::uint64_t seed, int iteration, ModelParams& params) {
  const int C = config.C, K = config.K, p = data.p;
  std::vector<double> ones(static_cast<std::size_t>(C) * K * p, 0.0);
  std::vector<double> zeros(static_cast<std::size_t>(C) * K * p, 0.0);
  for (int i = 0; i < state.n; ++i) {
    const int c = state.y[i];
    for (int j = 0; j < p; ++j) {
      std::int8_t v = data.x_at(i, j);
      if (v == kMissing) continue;
      const int k = state.z_at(i, state.s_at(c, j));
      const std::size_t cell = (static_cast<std::size_t>(c) * K + k) * p + j;
      if (v != 0) {
        ones[cell] += 1.0;
      } else {
        zeros[cell] += 1.0;
      }
    }
  }
  for (int c = 0; c < C; ++c) {
    for (int k = 0; k < K; ++k) {
      Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepPhi,
                        static_cast<std::uint64_t>(c) * K + k);
      for (int j = 0; j < p; ++j) {
        const std::size_t cell = (static_cast<std::size_t>(c) * K + k) * p + j;
        params.phi[cell] =
            rng.beta(config.beta_phi_a + ones[cell], config.beta_phi_b + zeros[cell]);
      }
    }
  }
}

void sample_s(const VADataset& data, const ModelConfig& config, const ModelParams& params,
              LatentState& state, std::uint64_t seed, int iteration, int threads) {
  if (!config.group_fixed.empty()) return;
  const int C = params.C, r = params.r, p = data.p;
  LogPhiTables tables = build_log_phi(params);
  std::vector<double> log_xi = log_vec(params.xi);

  // Row lists per cause over all labeled and imputed rows.
  std::vector<int> counts(static_cast<std::size_t>(C), 0);
  for (int i = 0; i < state.n; ++i) ++counts[static_cast<std::size_t>(state.y[i])];
  std::vector<int> offsets(static_cast<std::size_t>(C) + 1, 0);
  for (int c = 0; c < C; ++c) offsets[static_cast<std::size_t>(c) + 1] = offsets[static_cast<std::size_t>(c)] + counts[static_cast<std::size_t>(c)];
  std::vector<int> rows(static_cast<std::size_t>(state.n));
  std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
  for (int i = 0; i < state.n; ++i) rows[static_cast<std::size_t>(cursor[static_cast<std::size_t>(state.y[i])]++)] = i;

  std::atomic<long> fallbacks{0};
  parallel_for(C * p, threads, [&](int cell) {
    const int c = cell / p;
    const int j = cell % p;
    Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepS,
                      static_cast<std::uint64_t>(cell));
    std::vector<double> logw(static_cast<std::size_t>(r));
    const double* one_row = tables.row_one(c, j);
    const double* zero_row = tables.row_zero(c, j);
    for (int cand = 0; cand < r; ++cand) logw[static_cast<std::size_t>(cand)] = log_xi[static_cast<std::size_t>(c) * r + cand];
    for (int idx = offsets[static_cast<std::size_t>(c)]; idx < offsets[static_cast<std::size_t>(c) + 1]; ++idx) {
      const int i = rows[static_cast<std::size_t>(idx)];
      std::int8_t v = data.x_at(i, j);
      if (v == kMissing) continue;
      const double* row = v != 0 ? one_row : zero_row;
      const int* zi = state.z.data() + static_cast<std::size_t>(i) * r;
      for (int cand = 0; cand < r; ++cand) logw[static_cast<std::size_t>(cand)] += row[zi[cand]];
    }
    bool underflow = false;
    int pick = rng.categorical_from_log(logw, &underflow);
    if (underflow) {
      std::span<const double> prior(params.xi.data() + static_cast<std::size_t>(c) * r,
                                    static_cast<std::size_t>(r));
      pick = rng.categorical(prior);
      fallbacks.fetch_add(1);
    }
    state.s_at(c, j) = pick;
  });
  note_fallbacks("grouping update", fallbacks.load(), iteration);
}

void sample_xi(const LatentState& state, std::uint64_t seed, int iteration,
               ModelParams& params) {
  const int C = params.C, r = params.r;
  const double prior = 1.0 / static_cast<double>(r);
  std::vector<double> conc(static_cast<std::size_t>(r));
  for (int c = 0; c < C; ++c) {
    std::fill(conc.begin(), conc.end(), prior);
    for (int j = 0; j < state.p; ++j) conc[static_cast<std::size_t>(state.s_at(c, j))] += 1.0;
    Rng rng = Rng::at(seed, static_cast<std::uint64_t>(iteration), kStepXi,
                      static_cast<std::uint64_t>(c));
    rng.dirichlet(conc, std::span<double>(params.xi.data() + static_cast<std::size_t>(c) * r,
                                          static_cast<std::size_t>(r)));
  }
}

std::pair<LatentState, ModelParams> initialize(const VADataset& data,
                                               const ModelConfig& raw) {
  const ModelConfig config = with_defaults(raw);
  const int C = config.C, K = config.K, r = config.r, h = config.h, p = data.p;
  const std::uint64_t seed = config.mcmc.seed;
  ModelParams params = ModelParams::sized(config.family, C, K, r, h, p);
  LatentState state = LatentState::sized(data.n, C, p, r);

  {
    Rng rng = Rng::at(seed, 0, kStepInit, init_unit(0, 0));
    rng.dirichlet(config.alpha, params.pi0);
  }
  {
    Rng rng = Rng::at(seed, 0, kStepInit, init_unit(0, 1));
    rng.dirichlet(config.alpha, params.pi1);
  }
  if (config.family == ModelFamily::kCTucker) {
    std::vector<double> flat(static_cast<std::size_t>(h), 1.0 / static_cast<double>(h));
    for (int c = 0; c < C; ++c) {
      Rng rng = Rng::at(seed, 0, kStepInit, init_unit(1, static_cast<std::uint64_t>(c)));
      rng.dirichlet(flat, std::span<double>(params.nu.data() + static_cast<std::size_t>(c) * h,
                                            static_cast<std::size_t>(h)));
    }
    for (std::size_t row = 0; row < static_cast<std::size_t>(C) * h * r; ++row) {
      Rng rng = Rng::at(seed, 0, kStepInit, init_unit(2, row));
      rng.dirichlet(config.dir_psi, std::span<double>(params.psi.data() + row * K,
                                                      static_cast<std::size_t>(K)));
    }
  } else {
    for (std::size_t row = 0; row < static_cast<std::size_t>(C) * r; ++row) {
      Rng rng = Rng::at(seed, 0, kStepInit, init_unit(3, row));
      rng.dirichlet(config.dir_psi, std::span<double>(params.lambda.data() + row * K,
                                                      static_cast<std::size_t>(K)));
    }
  }
  for (int c = 0; c < C; ++c) {
    for (int k = 0; k < K; ++k) {
      Rng rng = Rng::at(seed, 0, kStepInit,
                        init_unit(4, static_cast<std::uint64_t>(c) * K + k));
      for (int j = 0; j < p; ++j) {
        params.phi_at(c, k, j) = rng.beta(config.beta_phi_a, config.beta_phi_b);
      }
    }
  }
  {
    const double flat = 1.0 / static_cast<double>(r);
    std::vector<double> conc(static_cast<std::size_t>(r), flat);
    for (int c = 0; c < C; ++c) {
      Rng rng = Rng::at(seed, 0, kStepInit, init_unit(5, static_cast<std::uint64_t>(c)));
      rng.dirichlet(conc, std::span<double>(params.xi.data() + static_cast<std::size_t>(c) * r,
                                            static_cast<std::size_t>(r)));
    }
  }

  // Causes: labeled rows keep their label, the rest start at the empirical
  // distribution of the labeled rows (uniform when there are none).
  std::vector<double> label_weights(static_cast<std::size_t>(C), 0.0);
  for (int i = 0; i < data.n; ++i) {
    if (data.domain[i] == 1) label_weights[static_cast<std::size_t>(data.y_obs[i])] += 1.0;
  }
  double total = 0.0;
  for (double w : label_weights) total += w;
  if (total <= 0.0) label_weights.assign(static_cast<std::size_t>(C), 1.0);
  for (int i = 0; i < data.n; ++i) {
    if (data.domain[i] == 1) {
      state.y[i] = data.y_obs[i];
    } else {
      Rng rng = Rng::at(seed, 0, kStepInit, init_unit(6, static_cast<std::uint64_t>(i)));
      state.y[i] = rng.categorical(label_weights);
    }
  }
  for (int i = 0; i < data.n; ++i) {
    Rng rng = Rng::at(seed, 0, kStepInit, init_unit(7, static_cast<std::uint64_t>(i)));
    for (int s = 0; s < r; ++s) state.z_at(i, s) = rng.uniform_int(0, K - 1);
  }
  for (int i = 0; i < data.n; ++i) {
    Rng rng = Rng::at(seed, 0, kStepInit, init_unit(8, static_cast<std::uint64_t>(i)));
    state.h[i] = h > 1 ? rng.uniform_int(0, h - 1) : 0;
  }
  if (!config.group_fixed.empty()) {
    state.s = config.group_fixed;
  } else {
    for (int c = 0; c < C; ++c) {
      Rng rng = Rng::at(seed, 0, kStepInit, init_unit(9, static_cast<std::uint64_t>(c)));
      for (int j = 0; j < p; ++j) state.s_at(c, j) = r > 1 ? rng.uniform_int(0, r - 1) : 0;
    }
  }
  return {std::move(state), std::move(params)};
}

double joint_log_density(const VADataset& data, const LatentState& state,
                         const ModelParams& params, ModelFamily family) {
  const int C = params.C, K = params.K, r = params.r, h = params.h, p = params.p;
  double lp = 0.0;

  for (int i = 0; i < state.n; ++i) {
    const auto& pi = data.domain[i] == 1 ? params.pi1 : params.pi0;
    lp += std::log(pi[static_cast<std::size_t>(state.y[i])]);
  }
  if (family == ModelFamily::kCTucker) {
    for (int i = 0; i < state.n; ++i) {
      const int c = state.y[i];
      const int l = state.h[i];
      lp += std::log(params.nu_at(c, l));
      for (int s = 0; s < r; ++s) lp += std::log(params.psi_at(c, l, s, state.z_at(i, s)));
    }
  } else {
    for (int i = 0; i < state.n; ++i) {
      const int c = state.y[i];
      for (int s = 0; s < r; ++s) lp += std::log(params.lambda_at(c, s, state.z_at(i, s)));
    }
  }
  for (int i = 0; i < state.n; ++i) {
    const int c = state.y[i];
    for (int j = 0; j < p; ++j) {
      std::int8_t v = data.x_at(i, j);
      if (v == kMissing) continue;
      lp += log_bernoulli(v, params.phi_at(c, state.z_at(i, state.s_at(c, j)), j));
    }
  }
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < p; ++j) lp += std::log(params.xi_at(c, state.s_at(c, j)));
  }

  // Prior kernels, without their normalizing constants.
  const double nu_a = 1.0 / static_cast<double>(h) - 1.0;
  const double xi_a = 1.0 / static_cast<double>(r) - 1.0;
  if (family == ModelFamily::kCTucker) {
    for (double v : params.nu) lp += nu_a * std::log(v);
  }
  for (double v : params.xi) lp += xi_a * std::log(v);
  (void)K;
  return lp;
}

namespace {

std::vector<std::uint8_t> occupancy(const LatentState& state, int C, int r, int K) {
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(C) * r * K, 0);
  for (int i = 0; i < state.n; ++i) {
    const std::size_t base = static_cast<std::size_t>(state.y[i]) * r;
    for (int s = 0; s < r; ++s) occ[(base + s) * K + state.z_at(i, s)] = 1;
  }
  return occ;
}

PosteriorDraws run_chain_impl(const VADataset& data, const ModelConfig& raw) {
  std::vector<Violation> violations = validate(data, raw);
  if (data.n == 0) {
    // A rowless dataset is a legal way to sample the prior; drop only the
    // row-count complaint and keep everything else.
    std::erase_if(violations, [](const Violation& v) {
      return v.kind == ViolationKind::kDatasetShape &&
             v.message == "dataset has no rows";
    });
  }
  if (!violations.empty()) {
    throw ValidationError("cannot fit this dataset/config pair:\n" +
                          violation_report(violations));
  }

  const ModelConfig config = with_defaults(raw);
  const ChainControl& ctl = config.mcmc;
  const bool coupled = config.family == ModelFamily::kCTucker;

  auto [state, params] = initialize(data, config);

  PosteriorDraws out;
  out.family = config.family;
  out.C = config.C;
  out.K = config.K;
  out.r = config.r;
  out.h = config.h;
  out.p = data.p;
  out.n = data.n;
  out.seed = ctl.seed;
  out.config_hash = config_hash(config);
  out.iterations = ctl.iterations;
  out.burn_in = ctl.burn_in;
  out.thinning = ctl.thinning;
  out.store_phi = ctl.store_phi;
  out.store_s = ctl.store_s;
  out.store_assignments = ctl.store_assignments;
  out.target_rows = unlabeled_rows(data);
  out.y_prob_sum.assign(out.target_rows.size() * static_cast<std::size_t>(config.C), 0.0);
  out.y_draw_count.assign(out.target_rows.size() * static_cast<std::size_t>(config.C), 0);

  const int expected =
      (ctl.iterations - ctl.burn_in + ctl.thinning - 1) / ctl.thinning;
  out.draws.reserve(static_cast<std::size_t>(std::max(expected, 0)));

  YAccumulator acc;
  acc.prob_sum = &out.y_prob_sum;
  acc.draw_count = &out.y_draw_count;

  for (int t = 1; t <= ctl.iterations; ++t) {
    const bool retained = t > ctl.burn_in && (t - ctl.burn_in) % ctl.thinning == 0;
    YAccumulator* sink = retained && !out.target_rows.empty() ? &acc : nullptr;
    if (coupled) {
      sample_y(data, params, state, ctl.seed, t, ctl.threads, sink);
      sample_z(data, params, state, ctl.seed, t, ctl.threads);
      sample_h(params, state, ctl.seed, t, ctl.threads);
      sample_pi(data, state, config, ctl.seed, t, params);
      sample_nu(state, config, ctl.seed, t, params);
      sample_psi(state, config, ctl.seed, t, params);
      sample_phi(data, state, config, ctl.seed, t, params);
      sample_s(data, config, params, state, ctl.seed, t, ctl.threads);
      sample_xi(state, ctl.seed, t, params);
    } else {
      sample_y_gip(data, params, state, ctl.seed, t, ctl.threads, sink);
      sample_z_gip(data, params, state, ctl.seed, t, ctl.threads);
      sample_lambda(state, config, ctl.seed, t, params);
      sample_pi(data, state, config, ctl.seed, t, params);
      sample_phi(data, state, config, ctl.seed, t, params);
      sample_s(data, config, params, state, ctl.seed, t, ctl.threads);
      sample_xi(state, ctl.seed, t, params);
    }

    if (retained) {
      ParamSnapshot snap;
      snap.iteration = t;
      snap.pi0 = params.pi0;
      snap.pi1 = params.pi1;
      if (coupled) {
        snap.nu = params.nu;
        snap.psi = params.psi;
      } else {
        snap.lambda = params.lambda;
      }
      snap.xi = params.xi;
      if (ctl.store_phi) snap.phi = params.phi;
      if (ctl.store_s) snap.s = state.s;
      if (ctl.store_assignments) {
        snap.y = state.y;
        snap.z = state.z;
        snap.h = state.h;
      }
      snap.class_occ = occupancy(state, config.C, config.r, config.K);
      snap.joint_logp = joint_log_density(data, state, params, config.family);
      out.draws.push_back(std::move(snap));
    }
    if (ctl.progress) ctl.progress(t, ctl.iterations);
  }
  return out;
}

}  // namespace

PosteriorDraws run_chain(const VADataset& data, const ModelConfig& config) {
  return run_chain_impl(data, config);
}

PosteriorDraws run_chain(const VADataset& data, const ModelConfig& config,
                         const ChainControl& control) {
  ModelConfig merged = config;
  merged.mcmc = control;
  return run_chain_impl(data, merged);
}

PosteriorDraws run_chain_gip(const VADataset& data, const ModelConfig& config) {
  if (config.family == ModelFamily::kCTucker) {
    throw DimensionError("run_chain_gip expects an independent-group family");
  }
  return run_chain_impl(data, config);
}

}  // namespace vatensor
