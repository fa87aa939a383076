#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vatensor/types.hpp"

namespace vatensor {

// Every update draws from a substream keyed by (seed, iteration, step, unit),
// so results are identical for any thread count and any sweep can be replayed
// in isolation.

// Optional Rao-Blackwell accumulation for the cause update: position t runs
// over the unlabeled rows in ascending row order, so both arrays hold
// (#unlabeled rows) * C entries.
struct YAccumulator {
  std::vector<double>* prob_sum = nullptr;
  std::vector<std::uint32_t>* draw_count = nullptr;
};

// Normalized full conditionals, exposed for verification and reuse. All of
// them marginalize exactly what the matching sampling step marginalizes.
std::vector<double> y_conditional(const VADataset& data, int i, const LatentState& state,
                                  const ModelParams& params);
std::vector<double> z_conditional(const VADataset& data, int i, int s,
                                  const LatentState& state, const ModelParams& params);
std::vector<double> h_conditional(int i, const LatentState& state,
                                  const ModelParams& params);
std::vector<double> s_conditional(const VADataset& data, int c, int j,
                                  const LatentState& state, const ModelParams& params);
std::vector<double> y_conditional_gip(const VADataset& data, int i,
                                      const LatentState& state, const ModelParams& params);
std::vector<double> z_conditional_gip(const VADataset& data, int i, int s,
                                      const LatentState& state, const ModelParams& params);

// Coupled-family sweep, one step each. Unlabeled causes, collapsed over all
// latent classes.
void sample_y(const VADataset& data, const ModelParams& params, LatentState& state,
              std::uint64_t seed, int iteration, int threads = 1,
              YAccumulator* acc = nullptr);
void sample_z(const VADataset& data, const ModelParams& params, LatentState& state,
              std::uint64_t seed, int iteration, int threads = 1);
void sample_h(const ModelParams& params, LatentState& state, std::uint64_t seed,
              int iteration, int threads = 1);
void sample_pi(const VADataset& data, const LatentState& state, const ModelConfig& config,
               std::uint64_t seed, int iteration, ModelParams& params);
void sample_nu(const LatentState& state, const ModelConfig& config, std::uint64_t seed,
               int iteration, ModelParams& params);
void sample_psi(const LatentState& state, const ModelConfig& config, std::uint64_t seed,
                int iteration, ModelParams& params);
void sample_phi(const VADataset& data, const LatentState& state, const ModelConfig& config,
                std::uint64_t seed, int iteration, ModelParams& params);
// No-op when the grouping is fixed by the config.
void sample_s(const VADataset& data, const ModelConfig& config, const ModelParams& params,
              LatentState& state, std::uint64_t seed, int iteration, int threads = 1);
void sample_xi(const LatentState& state, std::uint64_t seed, int iteration,
               ModelParams& params);

// Independent-group variants (the single-group family is the r=1 case).
void sample_y_gip(const VADataset& data, const ModelParams& params, LatentState& state,
                  std::uint64_t seed, int iteration, int threads = 1,
                  YAccumulator* acc = nullptr);
void sample_z_gip(const VADataset& data, const ModelParams& params, LatentState& state,
                  std::uint64_t seed, int iteration, int threads = 1);
void sample_lambda(const LatentState& state, const ModelConfig& config, std::uint64_t seed,
                   int iteration, ModelParams& params);

// Latents and parameters drawn from their priors; unlabeled causes start at
// the empirical distribution of the labeled rows.
std::pair<LatentState, ModelParams> initialize(const VADataset& data,
                                               const ModelConfig& config);

// Complete-data joint log density of (params, latents, data), up to an
// additive constant (prior normalizers are dropped). Used to rank retained
// sweeps and as a convergence trace.
double joint_log_density(const VADataset& data, const LatentState& state,
                         const ModelParams& params, ModelFamily family);

// Full Gibbs run. Dispatches on config.family; config.mcmc controls length,
// seed, storage, and thread count. Throws ValidationError on a bad
// dataset/config pair. A dataset with zero rows (and consistent empty
// columns) is allowed and yields draws from the prior.
PosteriorDraws run_chain(const VADataset& data, const ModelConfig& config);
PosteriorDraws run_chain(const VADataset& data, const ModelConfig& config,
                         const ChainControl& control);

// Same engine restricted to the independent-group families.
PosteriorDraws run_chain_gip(const VADataset& data, const ModelConfig& config);

}  // namespace vatensor
