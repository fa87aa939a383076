#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vatensor {

// All indices (causes, latent classes, symptom groups, rows) are 0-based in
// memory. File formats use 1-based labels; the io layer converts.

inline constexpr std::int8_t kMissing = -1;

enum class ModelFamily {
  kParafac,       // single group, single weight table
  kGroupParafac,  // r independent groups, per-group weights
  kCTucker        // r groups coupled through h upper-level profiles
};

const char* family_name(ModelFamily family);
std::optional<ModelFamily> parse_family(const std::string& text);

struct VADataset {
  int n = 0;  // individuals
  int p = 0;  // symptoms
  int C = 0;  // causes
  std::vector<std::int8_t> x;  // n*p entries in {0, 1, kMissing}
  std::vector<int> y_obs;      // n; observed cause or -1
  std::vector<std::uint8_t> domain;  // n; 1 = labeled source, 0 = target
  std::vector<std::string> ids;            // n, may be empty
  std::vector<std::string> symptom_names;  // p, may be empty
  std::vector<std::string> cause_names;    // C, may be empty

  std::int8_t x_at(int i, int j) const { return x[static_cast<std::size_t>(i) * p + j]; }
  std::int8_t& x_at(int i, int j) { return x[static_cast<std::size_t>(i) * p + j]; }
};

struct ChainControl {
  int iterations = 3000;
  int burn_in = 1000;
  int thinning = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  bool store_phi = false;
  bool store_s = true;
  bool store_assignments = false;
  // Called after every completed sweep with (iteration, total). Not part of
  // the reproducibility contract.
  std::function<void(int, int)> progress;
};

struct ModelConfig {
  ModelFamily family = ModelFamily::kCTucker;
  int C = 0;
  int K = 3;
  int r = 5;
  int h = 3;
  std::vector<double> alpha;    // C entries; empty means all ones
  std::vector<double> dir_psi;  // K entries; empty means all ones
  double beta_phi_a = 1.0;
  double beta_phi_b = 1.0;
  // Optional fixed symptom grouping, C*p entries in [0, r). When set the
  // grouping is never resampled.
  std::vector<int> group_fixed;
  ChainControl mcmc;
};

// Copy with empty alpha / dir_psi replaced by flat ones.
ModelConfig with_defaults(const ModelConfig& config);

struct LatentState {
  int n = 0, C = 0, p = 0, r = 0;
  std::vector<int> y;  // n
  std::vector<int> z;  // n*r
  std::vector<int> h;  // n
  std::vector<int> s;  // C*p

  static LatentState sized(int n, int C, int p, int r);

  int z_at(int i, int s_) const { return z[static_cast<std::size_t>(i) * r + s_]; }
  int& z_at(int i, int s_) { return z[static_cast<std::size_t>(i) * r + s_]; }
  int s_at(int c, int j) const { return s[static_cast<std::size_t>(c) * p + j]; }
  int& s_at(int c, int j) { return s[static_cast<std::size_t>(c) * p + j]; }
};

struct ModelParams {
  int C = 0, K = 0, r = 0, h = 0, p = 0;
  std::vector<double> pi0;     // C; target-domain prevalence
  std::vector<double> pi1;     // C; source-domain prevalence
  std::vector<double> nu;      // C*h
  std::vector<double> psi;     // C*h*r*K
  std::vector<double> lambda;  // C*r*K
  std::vector<double> phi;     // C*K*p
  std::vector<double> xi;      // C*r

  // Allocates the blocks the family actually uses (lambda for the
  // independent-group families, nu/psi for the coupled one).
  static ModelParams sized(ModelFamily family, int C, int K, int r, int h, int p);

  double nu_at(int c, int l) const { return nu[static_cast<std::size_t>(c) * h + l]; }
  double& nu_at(int c, int l) { return nu[static_cast<std::size_t>(c) * h + l]; }
  double psi_at(int c, int l, int s_, int k) const {
    return psi[((static_cast<std::size_t>(c) * h + l) * r + s_) * K + k];
  }
  double& psi_at(int c, int l, int s_, int k) {
    return psi[((static_cast<std::size_t>(c) * h + l) * r + s_) * K + k];
  }
  double lambda_at(int c, int s_, int k) const {
    return lambda[(static_cast<std::size_t>(c) * r + s_) * K + k];
  }
  double& lambda_at(int c, int s_, int k) {
    return lambda[(static_cast<std::size_t>(c) * r + s_) * K + k];
  }
  double phi_at(int c, int k, int j) const {
    return phi[(static_cast<std::size_t>(c) * K + k) * p + j];
  }
  double& phi_at(int c, int k, int j) {
    return phi[(static_cast<std::size_t>(c) * K + k) * p + j];
  }
  double xi_at(int c, int s_) const { return xi[static_cast<std::size_t>(c) * r + s_]; }
  double& xi_at(int c, int s_) { return xi[static_cast<std::size_t>(c) * r + s_]; }
};

// One retained sweep. class_occ is always kept: a C*r*K bitmap marking
// classes occupied by at least one individual of the cause.
struct ParamSnapshot {
  int iteration = 0;
  double joint_logp = 0.0;
  std::vector<double> pi0, pi1;
  std::vector<double> nu, psi;  // coupled family
  std::vector<double> lambda;   // independent-group families
  std::vector<double> xi;
  std::vector<double> phi;           // only when store_phi
  std::vector<int> s;                // only when store_s
  std::vector<int> y, z, h;          // only when store_assignments
  std::vector<std::uint8_t> class_occ;  // C*r*K
};

struct PosteriorDraws {
  ModelFamily family = ModelFamily::kCTucker;
  int C = 0, K = 0, r = 0, h = 0, p = 0, n = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  int iterations = 0, burn_in = 0, thinning = 0;
  bool store_phi = false, store_s = true, store_assignments = false;

  // Rao-Blackwellized cause masses for unlabeled rows, accumulated over
  // retained sweeps: y_prob_sum[t*C + c] sums the full conditional mass,
  // y_draw_count the realized draws. target_rows maps t to the dataset row.
  std::vector<int> target_rows;
  std::vector<double> y_prob_sum;
  std::vector<std::uint32_t> y_draw_count;

  std::vector<ParamSnapshot> draws;

  int retained() const { return static_cast<int>(draws.size()); }
};

enum class ViolationKind {
  kDatasetShape,
  kSymptomValue,
  kDomainValue,
  kLabel,
  kNames,
  kConfigDims,
  kConfigPrior,
  kConfigChain,
  kGroupFixed
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

// Full structural check of a dataset/config pair. Empty result means the
// pair is ready to fit. Every problem found is reported, not just the first.
std::vector<Violation> validate(const VADataset& data, const ModelConfig& config);

bool any_violation(std::span<const Violation> v, ViolationKind kind);
std::string violation_report(std::span<const Violation> v);

// Simplex and range checks over the blocks a family uses.
std::vector<Violation> check_params(const ModelParams& params, ModelFamily family,
                                    double tol = 1e-12);

// Stable 64-bit digest of everything that determines a chain's output.
std::uint64_t config_hash(const ModelConfig& config);

}  // namespace vatensor
