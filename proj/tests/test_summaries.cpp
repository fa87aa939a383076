#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "vatensor/error.hpp"
#include "vatensor/sampler.hpp"
#include "vatensor/summaries.hpp"
#include "vatensor/types.hpp"

namespace va = vatensor;

namespace {

va::PosteriorDraws empty_draws(int C, int K, int r, int h, int p,
                               va::ModelFamily family = va::ModelFamily::kCTucker) {
  va::PosteriorDraws d;
  d.family = family;
  d.C = C;
  d.K = K;
  d.r = r;
  d.h = h;
  d.p = p;
  d.store_s = true;
  return d;
}

va::ParamSnapshot blank_snapshot(const va::PosteriorDraws& d) {
  va::ParamSnapshot snap;
  snap.pi0.assign(d.C, 1.0 / d.C);
  snap.pi1.assign(d.C, 1.0 / d.C);
  snap.xi.assign(static_cast<std::size_t>(d.C) * d.r, 1.0 / d.r);
  if (d.family == va::ModelFamily::kCTucker) {
    snap.nu.assign(static_cast<std::size_t>(d.C) * d.h, 1.0 / d.h);
    snap.psi.assign(static_cast<std::size_t>(d.C) * d.h * d.r * d.K, 1.0 / d.K);
  } else {
    snap.lambda.assign(static_cast<std::size_t>(d.C) * d.r * d.K, 1.0 / d.K);
  }
  snap.s.assign(static_cast<std::size_t>(d.C) * d.p, 0);
  snap.class_occ.assign(static_cast<std::size_t>(d.C) * d.r * d.K, 0);
  return snap;
}

}  // namespace

TEST_SUITE_BEGIN("summaries");

TEST_CASE("group utilization counts occupied groups per sweep") {
  va::PosteriorDraws d = empty_draws(2, 2, 3, 1, 4);
  const std::vector<std::vector<int>> cause0 = {
      {0, 0, 1, 1}, {0, 0, 0, 0}, {2, 1, 0, 0}, {1, 1, 1, 1}};
  for (const auto& row : cause0) {
    va::ParamSnapshot snap = blank_snapshot(d);
    std::copy(row.begin(), row.end(), snap.s.begin());
    int fixed[4] = {0, 1, 2, 0};
    std::copy(fixed, fixed + 4, snap.s.begin() + 4);
    d.draws.push_back(snap);
  }

  va::GroupUtilization gu = va::group_utilization(d);
  CHECK(gu.fraction[0] == doctest::Approx(0.75));  // cause 0, group 0
  CHECK(gu.fraction[1] == doctest::Approx(0.75));
  CHECK(gu.fraction[2] == doctest::Approx(0.25));
  CHECK(gu.fraction[3] == doctest::Approx(1.0));   // cause 1 always uses all three
  CHECK(gu.fraction[4] == doctest::Approx(1.0));
  CHECK(gu.fraction[5] == doctest::Approx(1.0));
  CHECK(gu.average[0] == doctest::Approx(0.875));
  CHECK(gu.average[1] == doctest::Approx(0.875));
  CHECK(gu.average[2] == doctest::Approx(0.625));
  // Ties keep index order.
  CHECK(gu.order[0] == 0);
  CHECK(gu.order[1] == 1);
  CHECK(gu.order[2] == 2);
}

TEST_CASE("group utilization requires stored grouping draws") {
  va::PosteriorDraws d = empty_draws(2, 2, 2, 1, 3);
  d.store_s = false;
  va::ParamSnapshot snap = blank_snapshot(d);
  snap.s.clear();
  d.draws.push_back(snap);
  CHECK_THROWS_AS(va::group_utilization(d), va::Error);

  va::PosteriorDraws none = empty_draws(2, 2, 2, 1, 3);
  CHECK_THROWS_AS(va::group_utilization(none), va::Error);
}

TEST_CASE("a single group is always fully utilized") {
  va::PosteriorDraws d = empty_draws(2, 2, 1, 1, 3);
  d.draws.push_back(blank_snapshot(d));
  va::GroupUtilization gu = va::group_utilization(d);
  CHECK(gu.fraction == std::vector<double>{1.0, 1.0});
  CHECK(gu.average == std::vector<double>{1.0});
  CHECK(va::select_r(gu).recommended == 1);
}

TEST_CASE("class utilization averages the occupancy bitmaps") {
  va::PosteriorDraws d = empty_draws(1, 2, 2, 1, 3);
  for (int t = 0; t < 4; ++t) {
    va::ParamSnapshot snap = blank_snapshot(d);
    // Group 0: class 0 always, class 1 in half the sweeps. Group 1: class 1.
    snap.class_occ = {1, static_cast<std::uint8_t>(t % 2 == 0 ? 1 : 0), 0, 1};
    d.draws.push_back(snap);
  }
  va::ClassUtilization cu = va::class_utilization(d);
  CHECK(cu.fraction[0] == doctest::Approx(1.0));
  CHECK(cu.fraction[1] == doctest::Approx(0.5));
  CHECK(cu.fraction[2] == doctest::Approx(0.0));
  CHECK(cu.fraction[3] == doctest::Approx(1.0));
  CHECK(cu.order[0] == 0);
  CHECK(cu.order[1] == 1);
  CHECK(cu.order[2] == 1);  // group 1 ranks class 1 first
  CHECK(cu.order[3] == 0);
}

TEST_CASE("group count selection follows both rules") {
  va::GroupUtilization gu;
  gu.C = 1;
  gu.r = 3;

  gu.average = {1.0, 0.9, 0.04};
  va::RSelection pick = va::select_r(gu);
  CHECK(pick.by_threshold == 2);
  CHECK(pick.recommended == 2);

  gu.average = {0.9, 0.9, 0.06};
  pick = va::select_r(gu);
  CHECK(pick.by_threshold == 3);
  CHECK(pick.by_coverage == 2);
  CHECK(pick.recommended == 3);

  // Nothing above threshold still recommends one group.
  gu.average = {0.01, 0.01, 0.01};
  pick = va::select_r(gu);
  CHECK(pick.by_threshold == 1);

  // The coverage rule sees unsorted input.
  gu.average = {0.06, 0.9, 0.9};
  pick = va::select_r(gu);
  CHECK(pick.by_coverage == 2);
}

TEST_CASE("raising the threshold never raises the group recommendation") {
  std::mt19937_64 gen(71);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    va::GroupUtilization gu;
    gu.C = 1;
    gu.r = 6;
    gu.average.resize(6);
    for (double& v : gu.average) v = u01(gen);
    double t1 = u01(gen) * 0.5;
    double t2 = t1 + u01(gen) * 0.5;
    CHECK(va::select_r(gu, t2).by_threshold <= va::select_r(gu, t1).by_threshold);
  }
}

TEST_CASE("class budget selection follows the global-fraction rule") {
  va::ClassUtilization cu;
  cu.C = 1;
  cu.r = 2;
  cu.K = 3;
  cu.fraction = {0.9, 0.8, 0.7, 0.9, 0.01, 0.01};

  va::KSelection pick = va::select_k(cu);
  CHECK(pick.above_threshold == 4);
  CHECK(pick.recommended == 3);
  CHECK(pick.achieved == doctest::Approx(1.0));

  pick = va::select_k(cu, 0.75);
  CHECK(pick.above_threshold == 3);
  CHECK(pick.recommended == 2);
  CHECK(pick.achieved == doctest::Approx(1.0));

  // Dead table: recommend the minimum.
  cu.fraction.assign(6, 0.0);
  pick = va::select_k(cu);
  CHECK(pick.recommended == 1);
  CHECK(pick.achieved == 1.0);
}

TEST_CASE("the class budget can move either way as cells come and go") {
  // Cells with 3, 1, 1 classes above threshold: a budget of 2 already covers
  // 4 of 5. Dropping the two singleton cells pushes the budget to 3.
  va::ClassUtilization three;
  three.C = 1;
  three.r = 3;
  three.K = 3;
  three.fraction = {0.9, 0.9, 0.9, 0.9, 0.0, 0.0, 0.9, 0.0, 0.0};
  CHECK(va::select_k(three).recommended == 2);

  va::ClassUtilization two;
  two.C = 1;
  two.r = 2;
  two.K = 3;
  two.fraction = {0.9, 0.9, 0.9, 0.9, 0.0, 0.0};
  CHECK(va::select_k(two).recommended == 3);
}

TEST_CASE("group-class weights mix the coupled family and copy the independent one") {
  std::mt19937_64 gen(73);
  auto inst = oracle::random_instance(gen, 1, 4, 2, 3, 2, 2);
  const auto& pr = inst.params;
  std::vector<double> w = va::group_class_weights(pr, 1);
  REQUIRE(w.size() == 2 * 3);
  for (int s = 0; s < 2; ++s) {
    double total = 0;
    for (int k = 0; k < 3; ++k) {
      double expect = 0;
      for (int l = 0; l < 2; ++l) expect += pr.nu_at(1, l) * pr.psi_at(1, l, s, k);
      CHECK(w[s * 3 + k] == doctest::Approx(expect).epsilon(1e-13));
      total += w[s * 3 + k];
    }
    CHECK(total == doctest::Approx(1.0));
  }

  va::ModelParams gip = va::ModelParams::sized(va::ModelFamily::kGroupParafac, 2, 3, 2, 1, 4);
  gip.lambda = {0.5, 0.3, 0.2, 0.1, 0.1, 0.8, 0.2, 0.2, 0.6, 0.4, 0.4, 0.2};
  std::vector<double> lam = va::group_class_weights(gip, 0);
  CHECK(lam == std::vector<double>{0.5, 0.3, 0.2, 0.1, 0.1, 0.8});

  CHECK_THROWS_AS(va::group_class_weights(gip, 5), va::DimensionError);
}

TEST_CASE("symptom topics rank groups by prevalence and symptoms by certainty") {
  va::PosteriorDraws d = empty_draws(2, 2, 2, 1, 4);
  const std::vector<std::vector<int>> cause0 = {
      {0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}, {0, 1, 1, 1}};
  for (const auto& row : cause0) {
    va::ParamSnapshot snap = blank_snapshot(d);
    std::copy(row.begin(), row.end(), snap.s.begin());
    d.draws.push_back(snap);
  }

  va::VADataset data;
  data.n = 3;
  data.p = 4;
  data.C = 2;
  data.x = {1, 1, 0, va::kMissing,
            1, 0, 0, 1,
            0, 0, 1, 1};
  data.y_obs = {0, 0, -1};
  data.domain = {1, 1, 0};

  va::SymptomTopics topics = va::symptom_topics(d, data, 0, 2);
  CHECK(topics.mode_group == std::vector<int>{0, 0, 1, 1});
  CHECK(topics.mode_prob[0] == doctest::Approx(1.0));
  CHECK(topics.mode_prob[1] == doctest::Approx(0.75));
  CHECK(topics.mode_prob[2] == doctest::Approx(1.0));
  CHECK(topics.mode_prob[3] == doctest::Approx(1.0));
  CHECK(topics.empirical[0] == doctest::Approx(1.0));
  CHECK(topics.empirical[1] == doctest::Approx(0.5));
  CHECK(topics.empirical[2] == doctest::Approx(0.0));
  CHECK(topics.empirical[3] == doctest::Approx(1.0));  // missing cell dropped

  // Group 0 has the higher mean empirical rate; inside group 1 the mode
  // probabilities tie and the empirical rate breaks it.
  CHECK(topics.group_order == std::vector<int>{0, 1});
  CHECK(topics.ranked == std::vector<int>{0, 1, 3, 2});

  // Every symptom appears exactly once.
  std::vector<int> seen = topics.ranked;
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("a single retained sweep pins every mode probability to one") {
  va::PosteriorDraws d = empty_draws(2, 2, 3, 1, 4);
  va::ParamSnapshot snap = blank_snapshot(d);
  int row[4] = {2, 0, 1, 2};
  std::copy(row, row + 4, snap.s.begin());
  d.draws.push_back(snap);

  va::VADataset data;
  data.n = 1;
  data.p = 4;
  data.C = 2;
  data.x = {1, 0, 1, 0};
  data.y_obs = {0};
  data.domain = {1};

  va::SymptomTopics topics = va::symptom_topics(d, data, 0);
  CHECK(topics.mode_group == std::vector<int>{2, 0, 1, 2});
  for (double v : topics.mode_prob) CHECK(v == doctest::Approx(1.0));
  CHECK(topics.top_m == 5);
}

TEST_CASE("individual cause masses average the stored conditionals") {
  va::PosteriorDraws d = empty_draws(2, 2, 2, 1, 3);
  d.target_rows = {1, 4};
  d.y_prob_sum = {1.5, 0.5, 0.2, 1.8};
  d.y_draw_count = {2, 0, 1, 1};
  d.draws.push_back(blank_snapshot(d));
  d.draws.push_back(blank_snapshot(d));

  va::CauseProbs probs = va::individual_cause_probs(d);
  CHECK(probs.rows == std::vector<int>{1, 4});
  CHECK(probs.mean[0] == doctest::Approx(0.75));
  CHECK(probs.mean[1] == doctest::Approx(0.25));
  CHECK(probs.mean[2] == doctest::Approx(0.1));
  CHECK(probs.mean[3] == doctest::Approx(0.9));
  CHECK(probs.freq[0] == doctest::Approx(1.0));
  CHECK(probs.freq[1] == doctest::Approx(0.0));
  CHECK(probs.freq[2] == doctest::Approx(0.5));
  CHECK(probs.top == std::vector<int>{0, 1});
}

TEST_CASE("cause masses from a real chain are coherent") {
  std::mt19937_64 gen(79);
  auto inst = oracle::random_instance(gen, 12, 3, 2, 2, 2, 2, 0.1);
  va::ModelConfig cfg;
  cfg.C = 2;
  cfg.K = 2;
  cfg.r = 2;
  cfg.h = 2;
  cfg.mcmc.iterations = 20;
  cfg.mcmc.burn_in = 10;
  cfg.mcmc.seed = 91;
  va::PosteriorDraws out = va::run_chain(inst.data, cfg);
  va::CauseProbs probs = va::individual_cause_probs(out);
  REQUIRE(!probs.rows.empty());
  for (std::size_t t = 0; t < probs.rows.size(); ++t) {
    CHECK(inst.data.domain[probs.rows[t]] == 0);
    CHECK(probs.mean[t * 2] + probs.mean[t * 2 + 1] == doctest::Approx(1.0));
    CHECK(probs.freq[t * 2] + probs.freq[t * 2 + 1] == doctest::Approx(1.0));
    int top = probs.mean[t * 2] > probs.mean[t * 2 + 1] ? 0 : 1;
    CHECK(probs.top[t] == top);
  }
}

TEST_CASE("prevalence summaries reduce to the draws they came from") {
  va::PosteriorDraws d = empty_draws(2, 2, 2, 1, 3);

  va::ParamSnapshot a = blank_snapshot(d);
  a.pi0 = {0.3, 0.7};
  va::ParamSnapshot b = blank_snapshot(d);
  b.pi0 = {0.5, 0.5};
  d.draws = {a, b};

  va::CsmfEstimate two = va::csmf_estimate(d);
  CHECK(two.mean[0] == doctest::Approx(0.4));
  CHECK(two.mean[1] == doctest::Approx(0.6));
  CHECK(two.lower[0] == doctest::Approx(0.305));
  CHECK(two.upper[0] == doctest::Approx(0.495));
  CHECK(two.lower[1] == doctest::Approx(0.505));
  CHECK(two.upper[1] == doctest::Approx(0.695));

  // Constant draws collapse the interval.
  d.draws = {a, a, a};
  va::CsmfEstimate flat = va::csmf_estimate(d);
  CHECK(flat.mean[0] == doctest::Approx(0.3));
  CHECK(flat.lower[0] == doctest::Approx(0.3));
  CHECK(flat.upper[0] == doctest::Approx(0.3));

  CHECK_THROWS_AS(va::csmf_estimate(d, 1.5), va::DimensionError);
}

TEST_CASE("interval endpoints interpolate the sorted draws") {
  va::PosteriorDraws d = empty_draws(2, 2, 2, 1, 3);
  for (double v : {0.3, 0.1, 0.5, 0.2, 0.4}) {
    va::ParamSnapshot snap = blank_snapshot(d);
    snap.pi0 = {v, 1.0 - v};
    d.draws.push_back(snap);
  }
  va::CsmfEstimate est = va::csmf_estimate(d, 0.5);
  CHECK(est.mean[0] == doctest::Approx(0.3));
  CHECK(est.lower[0] == doctest::Approx(0.2));
  CHECK(est.upper[0] == doctest::Approx(0.4));
}

TEST_CASE("the reported sweep maximizes the joint density, first on ties") {
  va::PosteriorDraws d = empty_draws(2, 2, 2, 1, 3);
  for (double lp : {-5.0, -3.0, -3.0, -7.0}) {
    va::ParamSnapshot snap = blank_snapshot(d);
    snap.joint_logp = lp;
    d.draws.push_back(snap);
  }
  CHECK(va::map_sweep(d) == 1);

  va::PosteriorDraws none = empty_draws(2, 2, 2, 1, 3);
  CHECK_THROWS_AS(va::map_sweep(none), va::Error);
}

TEST_CASE("sweep parameters round-trip through the snapshot view") {
  std::mt19937_64 gen(83);
  auto inst = oracle::random_instance(gen, 8, 3, 2, 2, 2, 2, 0.1);
  va::ModelConfig cfg;
  cfg.C = 2;
  cfg.K = 2;
  cfg.r = 2;
  cfg.h = 2;
  cfg.mcmc.iterations = 8;
  cfg.mcmc.burn_in = 4;
  cfg.mcmc.store_phi = true;
  va::PosteriorDraws out = va::run_chain(inst.data, cfg);

  va::ModelParams pr = va::snapshot_params(out, 2);
  CHECK(pr.pi0 == out.draws[2].pi0);
  CHECK(pr.nu == out.draws[2].nu);
  CHECK(pr.psi == out.draws[2].psi);
  CHECK(pr.xi == out.draws[2].xi);
  CHECK(pr.phi == out.draws[2].phi);
  CHECK(va::check_params(pr, va::ModelFamily::kCTucker).empty());

  CHECK_THROWS_AS(va::snapshot_params(out, 99), va::DimensionError);

  // The reconstructed parameters drive the library like live ones.
  std::vector<double> w = va::group_class_weights(pr, 0);
  CHECK(w.size() == 2 * 2);
}

TEST_SUITE_END();
