#include "vatensor/types.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "vatensor/numeric.hpp"

namespace vatensor {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require(std::vector<Violation>& out, bool ok, ViolationKind kind,
             const std::string& message) {
  if (!ok) out.push_back({kind, message});
}

}  // namespace

const char* family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kParafac: return "parafac";
    case ModelFamily::kGroupParafac: return "group-parafac";
    case ModelFamily::kCTucker: return "ctucker";
  }
  return "ctucker";
}

std::optional<ModelFamily> parse_family(const std::string& text) {
  std::string t = lower(text);
  if (t == "parafac") return ModelFamily::kParafac;
  if (t == "group-parafac" || t == "gip" || t == "grouped-parafac") {
    return ModelFamily::kGroupParafac;
  }
  if (t == "ctucker" || t == "c-tucker" || t == "collapsed-tucker") {
    return ModelFamily::kCTucker;
  }
  return std::nullopt;
}

ModelConfig with_defaults(const ModelConfig& config) {
  ModelConfig out = config;
  if (out.alpha.empty()) out.alpha.assign(static_cast<std::size_t>(out.C), 1.0);
  if (out.dir_psi.empty()) out.dir_psi.assign(static_cast<std::size_t>(out.K), 1.0);
  return out;
}

LatentState LatentState::sized(int n, int C, int p, int r) {
  LatentState st;
  st.n = n;
  st.C = C;
  st.p = p;
  st.r = r;
  st.y.assign(static_cast<std::size_t>(n), 0);
  st.z.assign(static_cast<std::size_t>(n) * r, 0);
  st.h.assign(static_cast<std::size_t>(n), 0);
  st.s.assign(static_cast<std::size_t>(C) * p, 0);
  return st;
}

ModelParams ModelParams::sized(ModelFamily family, int C, int K, int r, int h, int p) {
  ModelParams pr;
  pr.C = C;
  pr.K = K;
  pr.r = r;
  pr.h = h;
  pr.p = p;
  pr.pi0.assign(static_cast<std::size_t>(C), 0.0);
  pr.pi1.assign(static_cast<std::size_t>(C), 0.0);
  pr.phi.assign(static_cast<std::size_t>(C) * K * p, 0.0);
  pr.xi.assign(static_cast<std::size_t>(C) * r, 0.0);
  if (family == ModelFamily::kCTucker) {
    pr.nu.assign(static_cast<std::size_t>(C) * h, 0.0);
    pr.psi.assign(static_cast<std::size_t>(C) * h * r * K, 0.0);
  } else {
    pr.lambda.assign(static_cast<std::size_t>(C) * r * K, 0.0);
  }
  return pr;
}

std::vector<Violation> validate(const VADataset& data, const ModelConfig& config) {
  std::vector<Violation> out;

  require(out, data.n >= 1, ViolationKind::kDatasetShape, "dataset has no rows");
  require(out, data.p >= 1, ViolationKind::kDatasetShape, "dataset has no symptom columns");
  require(out, data.C >= 2, ViolationKind::kDatasetShape,
          "at least two causes are required (C=" + std::to_string(data.C) + ")");

  const std::size_t want_x = static_cast<std::size_t>(std::max(data.n, 0)) *
                             static_cast<std::size_t>(std::max(data.p, 0));
  require(out, data.x.size() == want_x, ViolationKind::kDatasetShape,
          "symptom matrix has " + std::to_string(data.x.size()) + " cells, expected " +
              std::to_string(want_x));
  require(out, data.y_obs.size() == static_cast<std::size_t>(std::max(data.n, 0)),
          ViolationKind::kDatasetShape, "label vector length does not match row count");
  require(out, data.domain.size() == static_cast<std::size_t>(std::max(data.n, 0)),
          ViolationKind::kDatasetShape, "domain vector length does not match row count");

  if (data.x.size() == want_x && data.y_obs.size() == data.domain.size() &&
      data.y_obs.size() == static_cast<std::size_t>(std::max(data.n, 0))) {
    for (int i = 0; i < data.n; ++i) {
      for (int j = 0; j < data.p; ++j) {
        std::int8_t v = data.x_at(i, j);
        if (v != 0 && v != 1 && v != kMissing) {
          out.push_back({ViolationKind::kSymptomValue,
                         "row " + std::to_string(i + 1) + ", symptom " +
                             std::to_string(j + 1) + ": value " + std::to_string(v) +
                             " is not 0, 1, or missing"});
        }
      }
      if (data.domain[i] != 0 && data.domain[i] != 1) {
        out.push_back({ViolationKind::kDomainValue,
                       "row " + std::to_string(i + 1) + ": domain must be 0 or 1"});
        continue;
      }
      if (data.domain[i] == 1) {
        if (data.y_obs[i] < 0 || data.y_obs[i] >= data.C) {
          out.push_back({ViolationKind::kLabel,
                         "row " + std::to_string(i + 1) +
                             ": labeled row needs a cause in 1.." + std::to_string(data.C)});
        }
      } else if (data.y_obs[i] != -1) {
        out.push_back({ViolationKind::kLabel,
                       "row " + std::to_string(i + 1) + ": unlabeled row carries a cause"});
      }
    }
  }

  if (!data.ids.empty()) {
    require(out, data.ids.size() == static_cast<std::size_t>(data.n), ViolationKind::kNames,
            "id list length does not match row count");
  }
  if (!data.symptom_names.empty()) {
    require(out, data.symptom_names.size() == static_cast<std::size_t>(data.p),
            ViolationKind::kNames, "symptom name list length does not match column count");
  }
  if (!data.cause_names.empty()) {
    require(out, data.cause_names.size() == static_cast<std::size_t>(data.C),
            ViolationKind::kNames, "cause name list length does not match cause count");
  }

  require(out, config.C == data.C, ViolationKind::kConfigDims,
          "config expects " + std::to_string(config.C) + " causes, dataset has " +
              std::to_string(data.C));
  require(out, config.K >= 1, ViolationKind::kConfigDims, "K must be at least 1");
  require(out, config.r >= 1, ViolationKind::kConfigDims, "r must be at least 1");
  require(out, config.h >= 1, ViolationKind::kConfigDims, "h must be at least 1");
  if (data.p >= 1) {
    require(out, config.r <= data.p, ViolationKind::kConfigDims,
            "r=" + std::to_string(config.r) + " exceeds the symptom count " +
                std::to_string(data.p));
  }
  if (config.family == ModelFamily::kParafac) {
    require(out, config.r == 1 && config.h == 1, ViolationKind::kConfigDims,
            "the single-group family requires r=1 and h=1");
  } else if (config.family == ModelFamily::kGroupParafac) {
    require(out, config.h == 1, ViolationKind::kConfigDims,
            "the independent-group family requires h=1");
  }

  if (!config.alpha.empty()) {
    require(out, config.alpha.size() == static_cast<std::size_t>(config.C),
            ViolationKind::kConfigPrior, "alpha must have one entry per cause");
    for (double a : config.alpha) {
      if (!(a > 0.0)) {
        out.push_back({ViolationKind::kConfigPrior, "alpha entries must be positive"});
        break;
      }
    }
  }
  if (!config.dir_psi.empty()) {
    require(out, config.dir_psi.size() == static_cast<std::size_t>(config.K),
            ViolationKind::kConfigPrior, "dir_psi must have one entry per class");
    for (double b : config.dir_psi) {
      if (!(b > 0.0)) {
        out.push_back({ViolationKind::kConfigPrior, "dir_psi entries must be positive"});
        break;
      }
    }
  }
  require(out, config.beta_phi_a > 0.0 && config.beta_phi_b > 0.0,
          ViolationKind::kConfigPrior, "beta shape parameters must be positive");

  require(out, config.mcmc.iterations >= 1, ViolationKind::kConfigChain,
          "iterations must be at least 1");
  require(out, config.mcmc.burn_in >= 0, ViolationKind::kConfigChain,
          "burn-in cannot be negative");
  require(out, config.mcmc.burn_in < config.mcmc.iterations, ViolationKind::kConfigChain,
          "burn-in must be smaller than the iteration count");
  require(out, config.mcmc.thinning >= 1, ViolationKind::kConfigChain,
          "thinning must be at least 1");
  require(out, config.mcmc.threads >= 1, ViolationKind::kConfigChain,
          "thread count must be at least 1");

  if (!config.group_fixed.empty()) {
    const std::size_t want = static_cast<std::size_t>(std::max(config.C, 0)) *
                             static_cast<std::size_t>(std::max(data.p, 0));
    if (config.group_fixed.size() != want) {
      out.push_back({ViolationKind::kGroupFixed,
                     "fixed grouping has " + std::to_string(config.group_fixed.size()) +
                         " entries, expected " + std::to_string(want)});
    } else {
      for (int g : config.group_fixed) {
        if (g < 0 || g >= config.r) {
          out.push_back({ViolationKind::kGroupFixed,
                         "fixed grouping entries must lie in 1.." + std::to_string(config.r)});
          break;
        }
      }
    }
  }

  return out;
}

bool any_violation(std::span<const Violation> v, ViolationKind kind) {
  return std::any_of(v.begin(), v.end(),
                     [kind](const Violation& x) { return x.kind == kind; });
}

std::string violation_report(std::span<const Violation> v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) os << '\n';
    os << "- " << v[i].message;
  }
  return os.str();
}

namespace {

void check_simplex_rows(std::vector<Violation>& out, const std::vector<double>& data,
                        std::size_t row_len, const char* what, double tol) {
  if (row_len == 0) return;
  for (std::size_t off = 0; off + row_len <= data.size(); off += row_len) {
    if (!is_simplex(std::span<const double>(data.data() + off, row_len), tol)) {
      out.push_back({ViolationKind::kConfigPrior,
                     std::string(what) + " row starting at flat index " +
                         std::to_string(off) + " is not a probability vector"});
    }
  }
}

}  // namespace

std::vector<Violation> check_params(const ModelParams& params, ModelFamily family,
                                    double tol) {
  std::vector<Violation> out;
  check_simplex_rows(out, params.pi0, params.pi0.size(), "pi0", tol);
  check_simplex_rows(out, params.pi1, params.pi1.size(), "pi1", tol);
  check_simplex_rows(out, params.xi, static_cast<std::size_t>(params.r), "xi", tol);
  if (family == ModelFamily::kCTucker) {
    check_simplex_rows(out, params.nu, static_cast<std::size_t>(params.h), "nu", tol);
    check_simplex_rows(out, params.psi, static_cast<std::size_t>(params.K), "psi", tol);
  } else {
    check_simplex_rows(out, params.lambda, static_cast<std::size_t>(params.K), "lambda",
                       tol);
  }
  for (double v : params.phi) {
    if (!(v > 0.0 && v < 1.0)) {
      out.push_back({ViolationKind::kConfigPrior,
                     "phi entries must lie strictly inside (0, 1)"});
      break;
    }
  }
  return out;
}

std::uint64_t config_hash(const ModelConfig& config) {
  std::ostringstream os;
  os << family_name(config.family) << '|' << config.C << '|' << config.K << '|'
     << config.r << '|' << config.h << '|';
  for (double a : config.alpha) os << fmt17(a) << ',';
  os << '|';
  for (double b : config.dir_psi) os << fmt17(b) << ',';
  os << '|' << fmt17(config.beta_phi_a) << '|' << fmt17(config.beta_phi_b) << '|';
  for (int g : config.group_fixed) os << g << ',';
  os << '|' << config.mcmc.iterations << '|' << config.mcmc.burn_in << '|'
     << config.mcmc.thinning << '|' << config.mcmc.seed << '|' << config.mcmc.store_phi
     << config.mcmc.store_s << config.mcmc.store_assignments;
  const std::string text = os.str();

  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace vatensor
