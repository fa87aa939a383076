#include "vatensor/synth.hpp"

#include <cmath>
#include <string>

#include "vatensor/error.hpp"
#include "vatensor/log.hpp"
#include "vatensor/rng.hpp"

namespace vatensor {

namespace {

// Substream step codes for the generator.
enum : std::uint64_t {
  kGenPi = 0,
  kGenPsiTrain = 1,
  kGenPsiTarget = 2,
  kGenPhiShared = 3,
  kGenPhiCause = 4,
  kGenY = 5,
  kGenH = 6,
  kGenZ = 7,
  kGenX = 8
};

void check_sim(const SimConfig& sim) {
  if (sim.C < 2 || sim.p < 1 || sim.K < 1 || sim.r < 1 || sim.h < 1) {
    throw ValidationError("simulation dimensions must be positive (and C at least 2)");
  }
  if (sim.n_train < 0 || sim.n_target < 0 || sim.n_train + sim.n_target < 1) {
    throw ValidationError("simulation needs at least one row");
  }
  if (sim.p % sim.r != 0) {
    throw ValidationError("r must divide p for the cyclic grouping (p=" +
                          std::to_string(sim.p) + ", r=" + std::to_string(sim.r) + ")");
  }
  if (sim.beta_min < 1 || sim.beta_max < sim.beta_min) {
    throw ValidationError("concentration range must satisfy 1 <= beta_min <= beta_max");
  }
}

std::vector<double> draw_psi_block(const SimConfig& sim, std::uint64_t step) {
  const int C = sim.C, K = sim.K, r = sim.r, h = sim.h;
  std::vector<double> psi(static_cast<std::size_t>(C) * h * r * K);
  std::vector<double> conc(static_cast<std::size_t>(K));
  for (std::size_t row = 0; row < static_cast<std::size_t>(C) * h * r; ++row) {
    Rng rng = Rng::at(sim.seed, 0, step, row);
    double beta = static_cast<double>(rng.uniform_int(sim.beta_min, sim.beta_max));
    std::fill(conc.begin(), conc.end(), beta);
    rng.dirichlet(conc, std::span<double>(psi.data() + row * K, static_cast<std::size_t>(K)));
  }
  return psi;
}

}  // namespace

std::vector<int> cyclic_groups(int C, int p, int r) {
  if (C < 1 || p < 1 || r < 1) throw ValidationError("grouping dimensions must be positive");
  if (p % r != 0) {
    throw ValidationError("r must divide p for the cyclic grouping (p=" +
                          std::to_string(p) + ", r=" + std::to_string(r) + ")");
  }
  const int g = p / r;
  std::vector<int> s(static_cast<std::size_t>(C) * p);
  for (int c = 1; c <= C; ++c) {
    for (int j = 1; j <= p; ++j) {
      int shifted = ((j - (c - 1)) % p + p) % p;
      s[(static_cast<std::size_t>(c) - 1) * p + (j - 1)] = shifted / g;  // 0-based group
    }
  }
  return s;
}

SimResult generate(const SimConfig& sim) {
  check_sim(sim);
  const int C = sim.C, p = sim.p, K = sim.K, r = sim.r, h = sim.h;
  const int n = sim.n_train + sim.n_target;
  const int shared = (2 * r + 4) / 5;  // ceil(2r/5) leading cause-shared groups

  SimResult out;
  SimTruth& truth = out.truth;
  truth.shared_groups = shared;
  truth.s = cyclic_groups(C, p, r);
  truth.nu.assign(static_cast<std::size_t>(C) * h, 1.0 / static_cast<double>(h));

  truth.pi_train.resize(static_cast<std::size_t>(C));
  truth.pi_target.resize(static_cast<std::size_t>(C));
  {
    std::vector<double> ones(static_cast<std::size_t>(C), 1.0);
    Rng r0 = Rng::at(sim.seed, 0, kGenPi, 0);
    r0.dirichlet(ones, truth.pi_train);
    Rng r1 = Rng::at(sim.seed, 0, kGenPi, 1);
    r1.dirichlet(ones, truth.pi_target);
  }

  truth.psi_train = draw_psi_block(sim, kGenPsiTrain);
  truth.psi_target = sim.scenario == Scenario::kShifted
                         ? draw_psi_block(sim, kGenPsiTarget)
                         : truth.psi_train;

  // Emission tables: one shared pool plus per-cause pools, stitched by group.
  std::vector<double> phi_shared(static_cast<std::size_t>(K) * p);
  for (int k = 0; k < K; ++k) {
    Rng rng = Rng::at(sim.seed, 0, kGenPhiShared, static_cast<std::uint64_t>(k));
    for (int j = 0; j < p; ++j) phi_shared[static_cast<std::size_t>(k) * p + j] = rng.beta(1.0, 1.0);
  }
  truth.phi.resize(static_cast<std::size_t>(C) * K * p);
  for (int c = 0; c < C; ++c) {
    for (int k = 0; k < K; ++k) {
      Rng rng = Rng::at(sim.seed, 0, kGenPhiCause, static_cast<std::uint64_t>(c) * K + k);
      for (int j = 0; j < p; ++j) {
        double own = rng.beta(1.0, 1.0);
        bool is_shared = truth.s[static_cast<std::size_t>(c) * p + j] < shared;
        truth.phi[(static_cast<std::size_t>(c) * K + k) * p + j] =
            is_shared ? phi_shared[static_cast<std::size_t>(k) * p + j] : own;
      }
    }
  }

  VADataset& data = out.data;
  data.n = n;
  data.p = p;
  data.C = C;
  data.x.assign(static_cast<std::size_t>(n) * p, 0);
  data.y_obs.assign(static_cast<std::size_t>(n), -1);
  data.domain.assign(static_cast<std::size_t>(n), 0);
  data.ids.resize(static_cast<std::size_t>(n));
  truth.y.resize(static_cast<std::size_t>(n));
  truth.z.resize(static_cast<std::size_t>(n) * r);
  truth.h.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    const bool train = i < sim.n_train;
    data.domain[static_cast<std::size_t>(i)] = train ? 1 : 0;
    data.ids[static_cast<std::size_t>(i)] =
        (train ? "train_" : "target_") + std::to_string(train ? i + 1 : i - sim.n_train + 1);

    Rng ry = Rng::at(sim.seed, 0, kGenY, static_cast<std::uint64_t>(i));
    const int c = ry.categorical(train ? truth.pi_train : truth.pi_target);
    truth.y[static_cast<std::size_t>(i)] = c;
    if (train) data.y_obs[static_cast<std::size_t>(i)] = c;

    Rng rh = Rng::at(sim.seed, 0, kGenH, static_cast<std::uint64_t>(i));
    const int l = h > 1 ? rh.uniform_int(0, h - 1) : 0;
    truth.h[static_cast<std::size_t>(i)] = l;

    const std::vector<double>& psi = train ? truth.psi_train : truth.psi_target;
    Rng rz = Rng::at(sim.seed, 0, kGenZ, static_cast<std::uint64_t>(i));
    for (int s = 0; s < r; ++s) {
      const std::size_t row = (static_cast<std::size_t>(c) * h + l) * r + s;
      std::span<const double> weights(psi.data() + row * K, static_cast<std::size_t>(K));
      truth.z[static_cast<std::size_t>(i) * r + s] = rz.categorical(weights);
    }

    Rng rx = Rng::at(sim.seed, 0, kGenX, static_cast<std::uint64_t>(i));
    for (int j = 0; j < p; ++j) {
      const int g = truth.s[static_cast<std::size_t>(c) * p + j];
      const int k = truth.z[static_cast<std::size_t>(i) * r + g];
      const double prob = truth.phi[(static_cast<std::size_t>(c) * K + k) * p + j];
      data.x_at(i, j) = rx.uniform() < prob ? 1 : 0;
    }
  }
  return out;
}

ResampleResult resample_to_prevalence(const VADataset& source,
                                      std::span<const double> prevalence, int n_out,
                                      std::uint64_t seed, bool include_train) {
  if (static_cast<int>(prevalence.size()) != source.C) {
    throw ValidationError("prevalence needs one weight per cause");
  }
  if (n_out < 1) throw ValidationError("resample size must be positive");
  double total = 0.0;
  for (double w : prevalence) {
    if (!(w >= 0.0)) throw ValidationError("prevalence weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("prevalence weights sum to zero");

  std::vector<std::vector<int>> by_cause(static_cast<std::size_t>(source.C));
  for (int i = 0; i < source.n; ++i) {
    if (source.domain[static_cast<std::size_t>(i)] == 1) {
      by_cause[static_cast<std::size_t>(source.y_obs[static_cast<std::size_t>(i)])].push_back(i);
    }
  }

  std::vector<double> usable(prevalence.begin(), prevalence.end());
  bool dropped = false;
  for (int c = 0; c < source.C; ++c) {
    if (usable[static_cast<std::size_t>(c)] > 0.0 && by_cause[static_cast<std::size_t>(c)].empty()) {
      usable[static_cast<std::size_t>(c)] = 0.0;
      dropped = true;
    }
  }
  double usable_total = 0.0;
  for (double w : usable) usable_total += w;
  if (!(usable_total > 0.0)) {
    throw ValidationError("no labeled rows available for any cause with positive weight");
  }
  if (dropped) {
    log::warn("resample: dropped causes with no labeled rows and renormalized");
  }
  for (double& w : usable) w /= usable_total;

  ResampleResult out;
  out.prevalence = usable;
  VADataset& data = out.data;
  data.p = source.p;
  data.C = source.C;
  data.symptom_names = source.symptom_names;
  data.cause_names = source.cause_names;

  if (include_train) {
    for (int i = 0; i < source.n; ++i) {
      if (source.domain[static_cast<std::size_t>(i)] != 1) continue;
      for (int j = 0; j < source.p; ++j) data.x.push_back(source.x_at(i, j));
      data.y_obs.push_back(source.y_obs[static_cast<std::size_t>(i)]);
      data.domain.push_back(1);
      data.ids.push_back(source.ids.empty() ? "train_" + std::to_string(i + 1)
                                            : source.ids[static_cast<std::size_t>(i)]);
      ++data.n;
    }
  }
  for (int t = 0; t < n_out; ++t) {
    Rng rng = Rng::at(seed, 0, 9, static_cast<std::uint64_t>(t));
    const int c = rng.categorical(usable);
    const auto& pool = by_cause[static_cast<std::size_t>(c)];
    const int pick = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    for (int j = 0; j < source.p; ++j) data.x.push_back(source.x_at(pick, j));
    data.y_obs.push_back(-1);
    data.domain.push_back(0);
    data.ids.push_back("target_" + std::to_string(t + 1));
    out.truth_y.push_back(c);
    ++data.n;
  }
  return out;
}

}  // namespace vatensor
