#include "vatensor/likelihood.hpp"

#include <cmath>
#include <string>

#include "vatensor/error.hpp"
#include "vatensor/numeric.hpp"

namespace vatensor {

namespace {

void check_row_args(std::span<const std::int8_t> x, int c, const ModelParams& params,
                    std::span<const int> s_row) {
  if (static_cast<int>(x.size()) != params.p) {
    throw DimensionError("row has " + std::to_string(x.size()) + " symptoms, model has " +
                         std::to_string(params.p));
  }
  if (static_cast<int>(s_row.size()) != params.p) {
    throw DimensionError("grouping row length does not match the symptom count");
  }
  if (c < 0 || c >= params.C) throw DimensionError("cause index out of range");
  for (int g : s_row) {
    if (g < 0 || g >= params.r) throw DimensionError("group label out of range");
  }
}

}  // namespace

LogPhiTables build_log_phi(const ModelParams& params) {
  LogPhiTables t;
  t.C = params.C;
  t.K = params.K;
  t.p = params.p;
  const std::size_t cells = static_cast<std::size_t>(params.C) * params.p * params.K;
  t.log_one.resize(cells);
  t.log_zero.resize(cells);
  for (int c = 0; c < params.C; ++c) {
    for (int j = 0; j < params.p; ++j) {
      const std::size_t base = (static_cast<std::size_t>(c) * params.p + j) * params.K;
      for (int k = 0; k < params.K; ++k) {
        double ph = params.phi_at(c, k, j);
        t.log_one[base + k] = std::log(ph);
        t.log_zero[base + k] = std::log1p(-ph);
      }
    }
  }
  return t;
}

void accumulate_group_logmass(std::span<const std::int8_t> x, int c,
                              const LogPhiTables& tables, std::span<const int> s_row,
                              int r, std::span<double> out) {
  const int K = tables.K;
  if (out.size() != static_cast<std::size_t>(r) * K) {
    throw DimensionError("group log-mass buffer has the wrong size");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < static_cast<int>(x.size()); ++j) {
    std::int8_t v = x[j];
    if (v == kMissing) continue;
    const double* row = v != 0 ? tables.row_one(c, j) : tables.row_zero(c, j);
    double* cell = out.data() + static_cast<std::size_t>(s_row[j]) * K;
    for (int k = 0; k < K; ++k) cell[k] += row[k];
  }
}

double ctucker_mix_logmass(const ModelParams& params, int c,
                           std::span<const double> group_logmass) {
  const int K = params.K, r = params.r, h = params.h;
  std::vector<double> per_level(static_cast<std::size_t>(h));
  std::vector<double> buf(static_cast<std::size_t>(K));
  for (int l = 0; l < h; ++l) {
    double acc = std::log(params.nu_at(c, l));
    for (int s = 0; s < r; ++s) {
      for (int k = 0; k < K; ++k) {
        buf[k] = std::log(params.psi_at(c, l, s, k)) + group_logmass[s * K + k];
      }
      acc += log_sum_exp(buf);
    }
    per_level[l] = acc;
  }
  return log_sum_exp(per_level);
}

double gip_mix_logmass(const ModelParams& params, int c,
                       std::span<const double> group_logmass) {
  const int K = params.K, r = params.r;
  std::vector<double> buf(static_cast<std::size_t>(K));
  double total = 0.0;
  for (int s = 0; s < r; ++s) {
    for (int k = 0; k < K; ++k) {
      buf[k] = std::log(params.lambda_at(c, s, k)) + group_logmass[s * K + k];
    }
    total += log_sum_exp(buf);
  }
  return total;
}

double row_loglik_ctucker(std::span<const std::int8_t> x, int c,
                          const ModelParams& params, std::span<const int> s_row) {
  check_row_args(x, c, params, s_row);
  std::vector<double> mass(static_cast<std::size_t>(params.r) * params.K, 0.0);
  for (int j = 0; j < params.p; ++j) {
    std::int8_t v = x[j];
    if (v == kMissing) continue;
    double* cell = mass.data() + static_cast<std::size_t>(s_row[j]) * params.K;
    for (int k = 0; k < params.K; ++k) {
      cell[k] += log_bernoulli(v, params.phi_at(c, k, j));
    }
  }
  return ctucker_mix_logmass(params, c, mass);
}

double row_loglik_gip(std::span<const std::int8_t> x, int c, const ModelParams& params,
                      std::span<const int> s_row) {
  check_row_args(x, c, params, s_row);
  std::vector<double> mass(static_cast<std::size_t>(params.r) * params.K, 0.0);
  for (int j = 0; j < params.p; ++j) {
    std::int8_t v = x[j];
    if (v == kMissing) continue;
    double* cell = mass.data() + static_cast<std::size_t>(s_row[j]) * params.K;
    for (int k = 0; k < params.K; ++k) {
      cell[k] += log_bernoulli(v, params.phi_at(c, k, j));
    }
  }
  return gip_mix_logmass(params, c, mass);
}

ExpandedProfiles expand_profiles(const ModelParams& params, int c,
                                 std::span<const int> groups, std::span<const int> s_row,
                                 std::size_t cap) {
  if (c < 0 || c >= params.C) throw DimensionError("cause index out of range");
  if (groups.empty()) throw DimensionError("expand_profiles needs at least one group");
  if (static_cast<int>(s_row.size()) != params.p) {
    throw DimensionError("grouping row length does not match the symptom count");
  }
  for (std::size_t a = 0; a < groups.size(); ++a) {
    if (groups[a] < 0 || groups[a] >= params.r) {
      throw DimensionError("group label out of range");
    }
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      if (groups[a] == groups[b]) throw DimensionError("duplicate group requested");
    }
  }

  const int m = static_cast<int>(groups.size());
  const int K = params.K;
  double required = 1.0;
  for (int t = 0; t < m; ++t) required *= K;
  if (required > static_cast<double>(cap)) {
    throw CapacityError("expanding " + std::to_string(m) + " groups needs " +
                            std::to_string(required) + " combinations, cap is " +
                            std::to_string(cap),
                        required, static_cast<double>(cap));
  }
  const int rows = static_cast<int>(required);

  ExpandedProfiles out;
  out.c = c;
  out.K = K;
  out.groups.assign(groups.begin(), groups.end());
  out.rows = rows;

  for (int g : groups) {
    for (int j = 0; j < params.p; ++j) {
      if (s_row[j] == g) {
        out.columns.push_back(j);
        out.column_group.push_back(g);
      }
    }
  }

  const bool coupled = !params.psi.empty();
  out.combo.resize(static_cast<std::size_t>(rows) * m);
  out.weights.resize(static_cast<std::size_t>(rows));
  out.profiles.resize(static_cast<std::size_t>(rows) * out.columns.size());

  std::vector<int> combo(static_cast<std::size_t>(m));
  for (int idx = 0; idx < rows; ++idx) {
    int rem = idx;
    for (int t = m - 1; t >= 0; --t) {
      combo[t] = rem % K;
      rem /= K;
    }
    for (int t = 0; t < m; ++t) out.combo[static_cast<std::size_t>(idx) * m + t] = combo[t];

    double w;
    if (coupled) {
      w = 0.0;
      for (int l = 0; l < params.h; ++l) {
        double term = params.nu_at(c, l);
        for (int t = 0; t < m; ++t) term *= params.psi_at(c, l, groups[t], combo[t]);
        w += term;
      }
    } else {
      w = 1.0;
      for (int t = 0; t < m; ++t) w *= params.lambda_at(c, groups[t], combo[t]);
    }
    out.weights[static_cast<std::size_t>(idx)] = w;

    for (std::size_t col = 0; col < out.columns.size(); ++col) {
      int t = 0;
      while (groups[t] != out.column_group[col]) ++t;
      out.profiles[static_cast<std::size_t>(idx) * out.columns.size() + col] =
          params.phi_at(c, combo[t], out.columns[col]);
    }
  }
  return out;
}

}  // namespace vatensor
