// Command line front end: simulate | fit | summarize | evaluate | resample.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vatensor/vatensor.hpp"

namespace va = vatensor;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// Wall-clock per phase, for the manifest.
class PhaseTimer {
 public:
  void start(const std::string& name) {
    flush();
    current_ = name;
    t0_ = Clock::now();
  }
  json finish() {
    flush();
    json out = json::object();
    for (const auto& kv : phases_) out[kv.first] = kv.second;
    return out;
  }

 private:
  void flush() {
    if (current_.empty()) return;
    double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0_).count();
    phases_.emplace_back(current_, ms);
    current_.clear();
  }
  std::string current_;
  Clock::time_point t0_;
  std::vector<std::pair<std::string, double>> phases_;
};

std::string cause_label(const std::vector<std::string>& names, int c) {
  if (c < static_cast<int>(names.size()) && !names[c].empty()) return names[c];
  return "cause_" + std::to_string(c + 1);
}

std::string symptom_label(const std::vector<std::string>& names, int j) {
  if (j < static_cast<int>(names.size()) && !names[j].empty()) return names[j];
  return "s_" + std::to_string(j + 1);
}

void write_manifest(const std::string& dir, const std::string& command, json config,
                    json inputs, json outputs, std::uint64_t seed, PhaseTimer& timer) {
  json m;
  m["schema_version"] = 1;
  m["command"] = command;
  m["version"] = va::kVersion;
  m["seed"] = seed;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  m["timings_ms"] = timer.finish();
  va::write_text_atomic(dir + "/manifest.json", m.dump(2) + "\n");
}

json checksum_entry(const std::string& path) {
  json e;
  e["path"] = path;
  e["fnv1a"] = va::hex64(va::fnv1a_file(path));
  return e;
}

json kv_echo(const va::KvConfig& kv) {
  json out = json::object();
  for (const auto& item : kv.items) out[item.first] = item.second;
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config_file;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<int> r, k, h;
};

int cmd_simulate(const SimulateArgs& args) {
  PhaseTimer timer;
  timer.start("setup");
  va::KvConfig kv;
  if (!args.config_file.empty()) kv = va::read_kv_config(args.config_file);
  if (args.seed) kv.set("sim.seed", std::to_string(*args.seed));
  if (args.r) kv.set("sim.r", std::to_string(*args.r));
  if (args.k) kv.set("sim.K", std::to_string(*args.k));
  if (args.h) kv.set("sim.h", std::to_string(*args.h));
  va::SimConfig sim = va::sim_config_from_kv(kv);

  timer.start("generate");
  va::SimResult result = va::generate(sim);

  timer.start("write");
  const std::string& dir = args.output;
  va::write_dataset_csv(dir + "/dataset.csv", result.data);

  std::ostringstream ty;
  ty << "id,cause\n";
  for (int i = 0; i < result.data.n; ++i) {
    ty << result.data.ids[i] << ',' << (result.truth.y[i] + 1) << '\n';
  }
  va::write_text_atomic(dir + "/truth_y.csv", ty.str());

  std::ostringstream tp;
  tp << "domain,cause,prob\n";
  for (int c = 0; c < sim.C; ++c) {
    tp << "train," << (c + 1) << ',' << va::format_double(result.truth.pi_train[c]) << '\n';
  }
  for (int c = 0; c < sim.C; ++c) {
    tp << "target," << (c + 1) << ',' << va::format_double(result.truth.pi_target[c]) << '\n';
  }
  va::write_text_atomic(dir + "/truth_pi.csv", tp.str());

  json params;
  params["C"] = sim.C;
  params["p"] = sim.p;
  params["K"] = sim.K;
  params["r"] = sim.r;
  params["h"] = sim.h;
  params["scenario"] = sim.scenario == va::Scenario::kStable ? "stable" : "shifted";
  params["shared_groups"] = result.truth.shared_groups;
  params["nu"] = result.truth.nu;
  params["psi_train"] = result.truth.psi_train;
  params["psi_target"] = result.truth.psi_target;
  params["phi"] = result.truth.phi;
  json srows = json::array();
  for (int v : result.truth.s) srows.push_back(v + 1);
  params["s"] = std::move(srows);
  va::write_text_atomic(dir + "/truth_params.json", params.dump(2) + "\n");

  json outputs = json::array();
  for (const char* f : {"dataset.csv", "truth_y.csv", "truth_pi.csv", "truth_params.json"}) {
    outputs.push_back(checksum_entry(dir + "/" + f));
  }
  write_manifest(dir, "simulate", kv_echo(kv), json::array(), outputs, sim.seed, timer);
  return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string data_file;
  std::string config_file;
  std::string output;
  std::string family;
  std::string group_fixed_file;
  std::optional<int> k, r, h, iterations, burnin, thin, threads;
  std::optional<std::uint64_t> seed;
  bool store_phi = false;
  bool store_assignments = false;
};

va::ModelConfig resolve_fit_config(const FitArgs& args, va::KvConfig& kv, int dataset_C) {
  if (!args.config_file.empty()) kv = va::read_kv_config(args.config_file);
  if (!args.family.empty()) kv.set("model.family", args.family);
  if (args.k) kv.set("model.K", std::to_string(*args.k));
  if (args.r) kv.set("model.r", std::to_string(*args.r));
  if (args.h) kv.set("model.h", std::to_string(*args.h));
  if (args.iterations) kv.set("mcmc.iterations", std::to_string(*args.iterations));
  if (args.burnin) kv.set("mcmc.burn_in", std::to_string(*args.burnin));
  if (args.thin) kv.set("mcmc.thinning", std::to_string(*args.thin));
  if (args.seed) kv.set("mcmc.seed", std::to_string(*args.seed));
  if (args.threads) kv.set("mcmc.threads", std::to_string(*args.threads));
  if (args.store_phi) kv.set("mcmc.store_phi", "true");
  if (args.store_assignments) kv.set("mcmc.store_assignments", "true");
  return va::model_config_from_kv(kv, dataset_C);
}

void write_fit_results(const std::string& dir, const va::PosteriorDraws& draws,
                       const va::VADataset& data) {
  va::CsmfEstimate csmf = va::csmf_estimate(draws);
  std::ostringstream cs;
  cs << "cause,name,mean,lower,upper\n";
  for (int c = 0; c < draws.C; ++c) {
    cs << (c + 1) << ',' << cause_label(data.cause_names, c) << ','
       << va::format_double(csmf.mean[c]) << ',' << va::format_double(csmf.lower[c]) << ','
       << va::format_double(csmf.upper[c]) << '\n';
  }
  va::write_text_atomic(dir + "/csmf_estimate.csv", cs.str());

  va::CauseProbs probs = va::individual_cause_probs(draws);
  std::ostringstream ip;
  ip << "row,id,cause,name,mean_prob,draw_freq,is_top\n";
  for (std::size_t t = 0; t < probs.rows.size(); ++t) {
    int row = probs.rows[t];
    std::string id = row < static_cast<int>(data.ids.size()) && !data.ids[row].empty()
                         ? data.ids[row]
                         : "row_" + std::to_string(row + 1);
    for (int c = 0; c < draws.C; ++c) {
      ip << (row + 1) << ',' << id << ',' << (c + 1) << ',' << cause_label(data.cause_names, c)
         << ',' << va::format_double(probs.mean[t * draws.C + c]) << ','
         << va::format_double(probs.freq[t * draws.C + c]) << ','
         << (probs.top[t] == c ? 1 : 0) << '\n';
    }
  }
  va::write_text_atomic(dir + "/individual_cause_probs.csv", ip.str());

  std::ostringstream tr;
  tr << "sweep,iteration,joint_logp\n";
  for (int t = 0; t < draws.retained(); ++t) {
    tr << (t + 1) << ',' << draws.draws[t].iteration << ','
       << va::format_double(draws.draws[t].joint_logp) << '\n';
  }
  va::write_text_atomic(dir + "/trace.csv", tr.str());
}

int cmd_fit(const FitArgs& args) {
  PhaseTimer timer;
  timer.start("read");
  va::VADataset data = va::read_dataset_csv(args.data_file);

  timer.start("setup");
  va::KvConfig kv;
  va::ModelConfig config = resolve_fit_config(args, kv, data.C);
  if (config.C > data.C) data.C = config.C;
  if (!args.group_fixed_file.empty()) {
    config.group_fixed = va::read_group_matrix(args.group_fixed_file, config.C, data.p);
  }

  timer.start("sample");
  va::PosteriorDraws draws = va::run_chain(data, config);

  timer.start("write");
  const std::string& dir = args.output;
  va::write_draws(dir + "/draws", draws);
  write_fit_results(dir, draws, data);

  json cfg;
  cfg["family"] = va::family_name(config.family);
  cfg["C"] = config.C;
  cfg["K"] = config.K;
  cfg["r"] = config.r;
  cfg["h"] = config.h;
  cfg["beta_phi_a"] = config.beta_phi_a;
  cfg["beta_phi_b"] = config.beta_phi_b;
  cfg["iterations"] = config.mcmc.iterations;
  cfg["burn_in"] = config.mcmc.burn_in;
  cfg["thinning"] = config.mcmc.thinning;
  cfg["threads"] = config.mcmc.threads;
  cfg["store_phi"] = config.mcmc.store_phi;
  cfg["store_s"] = config.mcmc.store_s;
  cfg["store_assignments"] = config.mcmc.store_assignments;
  cfg["group_fixed"] = !config.group_fixed.empty();
  cfg["config_hash"] = va::hex64(va::config_hash(config));

  json inputs = json::array();
  inputs.push_back(checksum_entry(args.data_file));
  if (!args.config_file.empty()) inputs.push_back(checksum_entry(args.config_file));
  if (!args.group_fixed_file.empty()) inputs.push_back(checksum_entry(args.group_fixed_file));
  json outputs = json::array();
  for (const char* f :
       {"csmf_estimate.csv", "individual_cause_probs.csv", "trace.csv", "draws/index.csv"}) {
    outputs.push_back(checksum_entry(dir + "/" + f));
  }
  write_manifest(dir, "fit", std::move(cfg), std::move(inputs), std::move(outputs),
                 config.mcmc.seed, timer);
  return 0;
}

// --------------------------------------------------------------- summarize

struct SummarizeArgs {
  std::string draws_dir;
  std::string output;
  std::string data_file;
  std::string linkage = "average";
  int top_m = 5;
  int expand_groups = 2;
  double threshold_r = 0.05;
  double coverage_r = 0.95;
  double threshold_k = 0.05;
  double coverage_k = 0.80;
};

int cmd_summarize(const SummarizeArgs& args) {
  PhaseTimer timer;
  timer.start("read");
  va::PosteriorDraws draws = va::read_draws(args.draws_dir);
  va::VADataset data;
  bool have_data = !args.data_file.empty();
  if (have_data) {
    data = va::read_dataset_csv(args.data_file);
    if (data.p != draws.p) {
      throw va::ValidationError("dataset has " + std::to_string(data.p) +
                                " symptoms, draws expect " + std::to_string(draws.p));
    }
    data.C = std::max(data.C, draws.C);
  }
  const int C = draws.C, r = draws.r, K = draws.K, p = draws.p;
  const std::string& dir = args.output;

  timer.start("utilization");
  va::GroupUtilization gu = va::group_utilization(draws);
  std::ostringstream gu_csv;
  gu_csv << "cause,group,fraction\n";
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < r; ++s) {
      gu_csv << (c + 1) << ',' << (s + 1) << ','
             << va::format_double(gu.fraction[static_cast<std::size_t>(c) * r + s]) << '\n';
    }
  }
  va::write_text_atomic(dir + "/group_utilization.csv", gu_csv.str());
  std::ostringstream gua_csv;
  gua_csv << "group,average_fraction\n";
  for (int s = 0; s < r; ++s) {
    gua_csv << (s + 1) << ',' << va::format_double(gu.average[s]) << '\n';
  }
  va::write_text_atomic(dir + "/group_utilization_avg.csv", gua_csv.str());

  va::ClassUtilization cu = va::class_utilization(draws);
  std::ostringstream cu_csv;
  cu_csv << "cause,group,class,fraction\n";
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < r; ++s) {
      for (int k = 0; k < K; ++k) {
        cu_csv << (c + 1) << ',' << (s + 1) << ',' << (k + 1) << ','
               << va::format_double(cu.fraction[(static_cast<std::size_t>(c) * r + s) * K + k])
               << '\n';
      }
    }
  }
  va::write_text_atomic(dir + "/class_utilization.csv", cu_csv.str());

  va::RSelection rsel = va::select_r(gu, args.threshold_r, args.coverage_r);
  va::KSelection ksel = va::select_k(cu, args.threshold_k, args.coverage_k);
  json sel;
  sel["r"] = {{"recommended", rsel.recommended},
              {"by_threshold", rsel.by_threshold},
              {"by_coverage", rsel.by_coverage},
              {"threshold", rsel.threshold},
              {"coverage", rsel.coverage}};
  sel["K"] = {{"recommended", ksel.recommended},
              {"achieved", ksel.achieved},
              {"above_threshold", ksel.above_threshold},
              {"threshold", ksel.threshold},
              {"coverage", ksel.coverage}};
  va::write_text_atomic(dir + "/selection.json", sel.dump(2) + "\n");

  timer.start("map_sweep");
  int best = va::map_sweep(draws);
  va::ModelParams map_params = va::snapshot_params(draws, best);

  std::ostringstream gw_csv;
  gw_csv << "cause,group,class,weight\n";
  for (int c = 0; c < C; ++c) {
    std::vector<double> w = va::group_class_weights(map_params, c);
    for (int s = 0; s < r; ++s) {
      for (int k = 0; k < K; ++k) {
        gw_csv << (c + 1) << ',' << (s + 1) << ',' << (k + 1) << ','
               << va::format_double(w[static_cast<std::size_t>(s) * K + k]) << '\n';
      }
    }
  }
  va::write_text_atomic(dir + "/group_class_weights.csv", gw_csv.str());

  timer.start("grouping");
  bool have_s = draws.store_s && !draws.draws.empty() && !draws.draws[best].s.empty();
  std::vector<std::string> names;
  for (int c = 0; c < C; ++c) {
    names.push_back(cause_label(have_data ? data.cause_names : std::vector<std::string>{}, c));
  }
  if (have_s) {
    const std::vector<int>& s_map = draws.draws[best].s;
    std::vector<double> diss = va::cause_dissimilarity(s_map, C, p);
    std::ostringstream d_csv;
    d_csv << "cause_a,cause_b,dissimilarity\n";
    for (int a = 0; a < C; ++a) {
      for (int b = 0; b < C; ++b) {
        d_csv << (a + 1) << ',' << (b + 1) << ','
              << va::format_double(diss[static_cast<std::size_t>(a) * C + b]) << '\n';
      }
    }
    va::write_text_atomic(dir + "/cause_dissimilarity.csv", d_csv.str());

    va::Linkage linkage = va::Linkage::kAverage;
    if (args.linkage == "single") {
      linkage = va::Linkage::kSingle;
    } else if (args.linkage == "complete") {
      linkage = va::Linkage::kComplete;
    } else if (args.linkage != "average") {
      throw va::ValidationError("unknown linkage \"" + args.linkage + "\"");
    }
    va::Dendrogram tree = va::cause_dendrogram(s_map, C, p, linkage, names);
    va::write_text_atomic(dir + "/dendrogram.newick", va::to_newick(tree) + "\n");
    va::write_text_atomic(dir + "/dendrogram.json", va::dendrogram_json(tree) + "\n");
  } else {
    va::log::info("grouping draws absent; skipping dissimilarity and dendrogram");
  }

  timer.start("topics");
  if (have_data) {
    std::ostringstream tp_csv;
    tp_csv << "cause,rank,group,symptom,name,mode_prob,empirical,anchor\n";
    for (int c = 0; c < C; ++c) {
      va::SymptomTopics topics = va::symptom_topics(draws, data, c, args.top_m);
      int rank_in_group = 0;
      int last_group = -1;
      for (std::size_t pos = 0; pos < topics.ranked.size(); ++pos) {
        int j = topics.ranked[pos];
        int g = topics.mode_group[j];
        rank_in_group = g == last_group ? rank_in_group + 1 : 1;
        last_group = g;
        tp_csv << (c + 1) << ',' << (pos + 1) << ',' << (g + 1) << ',' << (j + 1) << ','
               << symptom_label(data.symptom_names, j) << ','
               << va::format_double(topics.mode_prob[j]) << ','
               << va::format_double(topics.empirical[j]) << ','
               << (rank_in_group <= args.top_m ? 1 : 0) << '\n';
      }
    }
    va::write_text_atomic(dir + "/symptom_topics.csv", tp_csv.str());
  } else {
    va::log::info("no dataset given; skipping symptom topics");
  }

  timer.start("profiles");
  if (have_s && draws.store_phi) {
    std::ostringstream w_csv, p_csv;
    w_csv << "cause,combo,label,weight\n";
    p_csv << "cause,combo,group,symptom,name,prob\n";
    for (int c = 0; c < C; ++c) {
      // Expand the leading utilized groups of this cause, by utilization rank.
      std::vector<int> groups;
      for (int pos = 0; pos < r && static_cast<int>(groups.size()) < args.expand_groups; ++pos) {
        int g = gu.order[static_cast<std::size_t>(c) * r + pos];
        if (gu.fraction[static_cast<std::size_t>(c) * r + g] > 0) groups.push_back(g);
      }
      if (groups.empty()) continue;
      std::span<const int> s_row(draws.draws[best].s);
      va::ExpandedProfiles ex =
          va::expand_profiles(map_params, c, groups, s_row.subspan(static_cast<std::size_t>(c) * p, p));
      int m = static_cast<int>(ex.groups.size());
      for (int row = 0; row < ex.rows; ++row) {
        std::string label;
        for (int g = 0; g < m; ++g) {
          if (g) label += '-';
          label += std::to_string(ex.combo[static_cast<std::size_t>(row) * m + g] + 1);
        }
        w_csv << (c + 1) << ',' << (row + 1) << ',' << label << ','
              << va::format_double(ex.weights[row]) << '\n';
        for (std::size_t col = 0; col < ex.columns.size(); ++col) {
          int j = ex.columns[col];
          p_csv << (c + 1) << ',' << (row + 1) << ',' << (ex.column_group[col] + 1) << ','
                << (j + 1) << ','
                << symptom_label(have_data ? data.symptom_names : std::vector<std::string>{}, j)
                << ','
                << va::format_double(ex.profiles[static_cast<std::size_t>(row) * ex.columns.size() + col])
                << '\n';
        }
      }
    }
    va::write_text_atomic(dir + "/expanded_weights.csv", w_csv.str());
    va::write_text_atomic(dir + "/expanded_profiles.csv", p_csv.str());
  } else {
    va::log::info("expanded profiles need stored phi and s draws; skipping");
  }

  timer.start("write");
  json cfg;
  cfg["top_m"] = args.top_m;
  cfg["expand_groups"] = args.expand_groups;
  cfg["linkage"] = args.linkage;
  cfg["threshold_r"] = args.threshold_r;
  cfg["coverage_r"] = args.coverage_r;
  cfg["threshold_k"] = args.threshold_k;
  cfg["coverage_k"] = args.coverage_k;
  json inputs = json::array();
  inputs.push_back(checksum_entry(args.draws_dir + "/index.csv"));
  if (have_data) inputs.push_back(checksum_entry(args.data_file));
  json outputs = json::array();
  for (const char* f : {"group_utilization.csv", "group_utilization_avg.csv",
                        "class_utilization.csv", "selection.json", "group_class_weights.csv"}) {
    outputs.push_back(checksum_entry(dir + "/" + f));
  }
  write_manifest(dir, "summarize", std::move(cfg), std::move(inputs), std::move(outputs),
                 draws.seed, timer);
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string predictions_file;
  std::string truth_file;
  std::string pi_true_file;
  std::string csmf_file;
  std::string output;
};

struct PredictionTable {
  std::vector<std::string> ids;
  std::vector<int> top;              // 0-based
  std::vector<std::vector<double>> mean;  // per row, empty when absent
  int C = 0;
};

PredictionTable read_predictions(const std::string& path) {
  std::istringstream in(va::read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw va::ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  PredictionTable out;
  if (line == "id,cause" || line == "id,cause\r") {
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::size_t comma = line.find(',');
      if (comma == std::string::npos) {
        throw va::ValidationError(path + ":" + std::to_string(line_no) + ": expected id,cause");
      }
      out.ids.push_back(line.substr(0, comma));
      int cause = std::atoi(line.substr(comma + 1).c_str());
      if (cause < 1) {
        throw va::ValidationError(path + ":" + std::to_string(line_no) + ": cause labels are 1-based");
      }
      out.top.push_back(cause - 1);
      out.C = std::max(out.C, cause);
    }
    return out;
  }
  if (line.rfind("row,id,cause,name,mean_prob,draw_freq,is_top", 0) != 0) {
    throw va::ValidationError(path + ": expected an id,cause table or an individual_cause_probs file");
  }
  std::map<std::string, std::pair<std::vector<double>, int>> rows;
  std::vector<std::string> order;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (cells.size() != 7) {
      throw va::ValidationError(path + ":" + std::to_string(line_no) + ": expected 7 cells");
    }
    const std::string& id = cells[1];
    int cause = std::atoi(cells[2].c_str());
    if (cause < 1) {
      throw va::ValidationError(path + ":" + std::to_string(line_no) + ": cause labels are 1-based");
    }
    auto& entry = rows[id];
    if (rows.size() > order.size()) order.push_back(id);
    if (static_cast<int>(entry.first.size()) < cause) entry.first.resize(cause, 0.0);
    entry.first[cause - 1] = std::strtod(cells[4].c_str(), nullptr);
    if (cells[6] == "1") entry.second = cause - 1;
    out.C = std::max(out.C, cause);
  }
  for (const std::string& id : order) {
    auto& entry = rows[id];
    entry.first.resize(out.C, 0.0);
    out.ids.push_back(id);
    out.top.push_back(entry.second);
    out.mean.push_back(entry.first);
  }
  return out;
}

std::map<std::string, int> read_truth_labels(const std::string& path, int* max_cause) {
  std::istringstream in(va::read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw va::ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,cause") throw va::ValidationError(path + ": expected header id,cause");
  std::map<std::string, int> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw va::ValidationError(path + ":" + std::to_string(line_no) + ": expected id,cause");
    }
    int cause = std::atoi(line.substr(comma + 1).c_str());
    if (cause < 1) {
      throw va::ValidationError(path + ":" + std::to_string(line_no) + ": cause labels are 1-based");
    }
    out[line.substr(0, comma)] = cause - 1;
    *max_cause = std::max(*max_cause, cause);
  }
  return out;
}

// cause,prob rows or a truth_pi.csv (domain,cause,prob; target rows win).
std::vector<double> read_prevalence_file(const std::string& path) {
  std::istringstream in(va::read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw va::ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool with_domain = line == "domain,cause,prob";
  if (!with_domain && line != "cause,prob") {
    throw va::ValidationError(path + ": expected header cause,prob or domain,cause,prob");
  }
  std::vector<double> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    std::string where = path + ":" + std::to_string(line_no);
    if (with_domain) {
      if (cells.size() != 3) throw va::ValidationError(where + ": expected 3 cells");
      if (cells[0] != "target") continue;
      cells.erase(cells.begin());
    } else if (cells.size() != 2) {
      throw va::ValidationError(where + ": expected 2 cells");
    }
    int cause = std::atoi(cells[0].c_str());
    if (cause < 1) throw va::ValidationError(where + ": cause labels are 1-based");
    if (static_cast<int>(out.size()) < cause) out.resize(cause, 0.0);
    out[cause - 1] = std::strtod(cells[1].c_str(), nullptr);
  }
  if (out.empty()) throw va::ValidationError(path + ": no prevalence rows");
  return out;
}

int cmd_evaluate(const EvaluateArgs& args) {
  PhaseTimer timer;
  timer.start("read");
  PredictionTable pred = read_predictions(args.predictions_file);
  int C = pred.C;
  std::map<std::string, int> truth = read_truth_labels(args.truth_file, &C);

  std::vector<double> pi_true;
  if (!args.pi_true_file.empty()) {
    pi_true = read_prevalence_file(args.pi_true_file);
    if (static_cast<int>(pi_true.size()) < C) {
      throw va::ValidationError("prediction or truth labels exceed the " +
                                std::to_string(pi_true.size()) + " causes in " + args.pi_true_file);
    }
    C = static_cast<int>(pi_true.size());
  }

  timer.start("score");
  std::vector<int> top, truth_vec;
  for (std::size_t t = 0; t < pred.ids.size(); ++t) {
    auto it = truth.find(pred.ids[t]);
    if (it == truth.end()) {
      throw va::ValidationError("prediction id \"" + pred.ids[t] + "\" has no truth label");
    }
    top.push_back(pred.top[t]);
    truth_vec.push_back(it->second);
  }
  if (top.empty()) throw va::ValidationError("no predictions to score");
  double top_acc = va::top_cause_accuracy(top, truth_vec);

  std::vector<double> pi_hat(C, 0.0);
  std::string pi_hat_source;
  if (!args.csmf_file.empty()) {
    // cause,name,mean,lower,upper from a fit.
    std::istringstream in(va::read_text(args.csmf_file));
    std::string line;
    if (!std::getline(in, line) || line.rfind("cause,name,mean", 0) != 0) {
      throw va::ValidationError(args.csmf_file + ": expected a csmf_estimate file");
    }
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::size_t c1 = line.find(',');
      std::size_t c2 = line.find(',', c1 + 1);
      std::size_t c3 = line.find(',', c2 + 1);
      int cause = std::atoi(line.substr(0, c1).c_str());
      if (cause < 1 || cause > C) {
        throw va::ValidationError(args.csmf_file + ": cause " + std::to_string(cause) +
                                  " outside 1.." + std::to_string(C));
      }
      pi_hat[cause - 1] = std::strtod(line.substr(c2 + 1, c3 - c2 - 1).c_str(), nullptr);
    }
    pi_hat_source = "csmf_estimate";
  } else if (!pred.mean.empty()) {
    for (const std::vector<double>& row : pred.mean) {
      if (static_cast<int>(row.size()) > C) {
        throw va::ValidationError("predictions cover more causes than the truth set");
      }
      for (std::size_t c = 0; c < row.size(); ++c) pi_hat[c] += row[c];
    }
    for (double& v : pi_hat) v /= static_cast<double>(pred.mean.size());
    pi_hat_source = "mean_individual_probs";
  } else {
    for (int c : top) {
      if (c >= C) throw va::ValidationError("predicted cause outside the truth cause set");
      pi_hat[c] += 1.0;
    }
    for (double& v : pi_hat) v /= static_cast<double>(top.size());
    pi_hat_source = "predicted_frequencies";
  }
  for (int c : top) {
    if (c >= C) throw va::ValidationError("predicted cause outside the truth cause set");
  }

  std::string pi_true_source = "truth_frequencies";
  if (pi_true.empty()) {
    pi_true.assign(C, 0.0);
    for (int c : truth_vec) pi_true[c] += 1.0;
    for (double& v : pi_true) v /= static_cast<double>(truth_vec.size());
  } else {
    pi_true_source = "file";
  }
  double csmf_acc = va::csmf_accuracy(pi_hat, pi_true);

  timer.start("write");
  json metrics;
  metrics["n_eval"] = top.size();
  metrics["C"] = C;
  metrics["top_cause_accuracy"] = top_acc;
  metrics["csmf_accuracy"] = csmf_acc;
  metrics["pi_hat"] = pi_hat;
  metrics["pi_true"] = pi_true;
  metrics["pi_hat_source"] = pi_hat_source;
  metrics["pi_true_source"] = pi_true_source;
  va::write_text_atomic(args.output + "/metrics.json", metrics.dump(2) + "\n");
  std::printf("top_cause_accuracy=%.6f csmf_accuracy=%.6f n=%zu\n", top_acc, csmf_acc, top.size());

  json inputs = json::array();
  inputs.push_back(checksum_entry(args.predictions_file));
  inputs.push_back(checksum_entry(args.truth_file));
  if (!args.pi_true_file.empty()) inputs.push_back(checksum_entry(args.pi_true_file));
  if (!args.csmf_file.empty()) inputs.push_back(checksum_entry(args.csmf_file));
  json outputs = json::array();
  outputs.push_back(checksum_entry(args.output + "/metrics.json"));
  write_manifest(args.output, "evaluate", json::object(), std::move(inputs), std::move(outputs),
                 0, timer);
  return 0;
}

// ---------------------------------------------------------------- resample

struct ResampleArgs {
  std::string data_file;
  std::string output;
  std::string prevalence_file;
  std::optional<double> dirichlet;
  int n_out = 1000;
  std::uint64_t seed = 1;
  bool drop_train = false;
};

int cmd_resample(const ResampleArgs& args) {
  PhaseTimer timer;
  timer.start("read");
  va::VADataset source = va::read_dataset_csv(args.data_file);
  if (source.C < 1) throw va::ValidationError("source dataset has no labeled rows");

  std::vector<double> prevalence;
  if (!args.prevalence_file.empty()) {
    prevalence = read_prevalence_file(args.prevalence_file);
    if (static_cast<int>(prevalence.size()) != source.C) {
      throw va::ValidationError("prevalence lists " + std::to_string(prevalence.size()) +
                                " causes, dataset has " + std::to_string(source.C));
    }
  } else if (args.dirichlet) {
    if (*args.dirichlet <= 0) throw va::ValidationError("--dirichlet needs a positive concentration");
    std::vector<double> alpha(source.C, *args.dirichlet);
    prevalence.assign(source.C, 0.0);
    va::Rng rng = va::Rng::at(args.seed, 0, 100, 0);
    rng.dirichlet(alpha, prevalence);
  } else {
    throw va::ValidationError("pass --prevalence or --dirichlet");
  }

  timer.start("resample");
  va::ResampleResult result =
      va::resample_to_prevalence(source, prevalence, args.n_out, args.seed, !args.drop_train);

  timer.start("write");
  const std::string& dir = args.output;
  va::write_dataset_csv(dir + "/dataset.csv", result.data);
  std::ostringstream ty;
  ty << "id,cause\n";
  int offset = result.data.n - static_cast<int>(result.truth_y.size());
  for (std::size_t t = 0; t < result.truth_y.size(); ++t) {
    ty << result.data.ids[offset + t] << ',' << (result.truth_y[t] + 1) << '\n';
  }
  va::write_text_atomic(dir + "/truth_y.csv", ty.str());
  std::ostringstream pv;
  pv << "cause,prob\n";
  for (std::size_t c = 0; c < result.prevalence.size(); ++c) {
    pv << (c + 1) << ',' << va::format_double(result.prevalence[c]) << '\n';
  }
  va::write_text_atomic(dir + "/prevalence.csv", pv.str());

  json cfg;
  cfg["n_out"] = args.n_out;
  cfg["include_train"] = !args.drop_train;
  if (args.dirichlet) cfg["dirichlet"] = *args.dirichlet;
  json inputs = json::array();
  inputs.push_back(checksum_entry(args.data_file));
  if (!args.prevalence_file.empty()) inputs.push_back(checksum_entry(args.prevalence_file));
  json outputs = json::array();
  for (const char* f : {"dataset.csv", "truth_y.csv", "prevalence.csv"}) {
    outputs.push_back(checksum_entry(dir + "/" + f));
  }
  write_manifest(dir, "resample", std::move(cfg), std::move(inputs), std::move(outputs),
                 args.seed, timer);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dimension-grouped latent class models for verbal autopsy data"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(va::kVersion));
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Draw a synthetic train/target dataset");
  sim->add_option("--config", sim_args.config_file, "Key-value config file (sim.* keys)");
  sim->add_option("--output", sim_args.output, "Output directory")->required();
  sim->add_option("--seed", sim_args.seed, "Generator seed");
  sim->add_option("--r", sim_args.r, "True number of symptom groups");
  sim->add_option("--k", sim_args.k, "True number of latent classes");
  sim->add_option("--h", sim_args.h, "True number of upper-level profiles");

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Run a Gibbs chain on a dataset");
  fit->add_option("--data", fit_args.data_file, "Dataset CSV")->required();
  fit->add_option("--config", fit_args.config_file, "Key-value config file (model.*, mcmc.*)");
  fit->add_option("--output", fit_args.output, "Output directory")->required();
  fit->add_option("--family", fit_args.family, "parafac | gip | ctucker");
  fit->add_option("--k", fit_args.k, "Latent classes per group");
  fit->add_option("--r", fit_args.r, "Symptom groups");
  fit->add_option("--h", fit_args.h, "Upper-level profiles");
  fit->add_option("--iterations", fit_args.iterations, "Total Gibbs sweeps");
  fit->add_option("--burnin", fit_args.burnin, "Discarded leading sweeps");
  fit->add_option("--thin", fit_args.thin, "Keep every thin-th sweep after burn-in");
  fit->add_option("--seed", fit_args.seed, "Chain seed");
  fit->add_option("--threads", fit_args.threads, "Worker cap");
  fit->add_flag("--store-phi", fit_args.store_phi, "Keep emission draws in the output");
  fit->add_flag("--store-assignments", fit_args.store_assignments,
                "Keep per-death latent assignments in the output");
  fit->add_option("--group-fixed", fit_args.group_fixed_file,
                  "CSV of fixed group labels (C rows, p columns); disables grouping moves");

  SummarizeArgs sum_args;
  CLI::App* summ = app.add_subcommand("summarize", "Interpretability tables from stored draws");
  summ->add_option("--draws", sum_args.draws_dir, "Draws directory from a fit")->required();
  summ->add_option("--output", sum_args.output, "Output directory")->required();
  summ->add_option("--data", sum_args.data_file, "Dataset CSV (enables symptom topics)");
  summ->add_option("--top-m", sum_args.top_m, "Anchor symptoms per group");
  summ->add_option("--expand-groups", sum_args.expand_groups,
                   "Groups per cause in the expanded profiles");
  summ->add_option("--linkage", sum_args.linkage, "average | single | complete");
  summ->add_option("--threshold-r", sum_args.threshold_r, "Group utilization threshold");
  summ->add_option("--coverage-r", sum_args.coverage_r, "Group utilization mass target");
  summ->add_option("--threshold-k", sum_args.threshold_k, "Class utilization threshold");
  summ->add_option("--coverage-k", sum_args.coverage_k, "Class coverage target");

  EvaluateArgs eval_args;
  CLI::App* eval = app.add_subcommand("evaluate", "Score predictions against true causes");
  eval->add_option("--predictions", eval_args.predictions_file,
                   "id,cause table or individual_cause_probs.csv")
      ->required();
  eval->add_option("--truth", eval_args.truth_file, "id,cause table")->required();
  eval->add_option("--pi-true", eval_args.pi_true_file, "True prevalence (cause,prob)");
  eval->add_option("--csmf", eval_args.csmf_file, "csmf_estimate.csv to score as pi_hat");
  eval->add_option("--output", eval_args.output, "Output directory")->required();

  ResampleArgs rs_args;
  CLI::App* rs = app.add_subcommand("resample", "Resample labeled rows to a target prevalence");
  rs->add_option("--data", rs_args.data_file, "Source dataset CSV")->required();
  rs->add_option("--output", rs_args.output, "Output directory")->required();
  rs->add_option("--prevalence", rs_args.prevalence_file, "Target prevalence (cause,prob)");
  rs->add_option("--dirichlet", rs_args.dirichlet,
                 "Draw the target prevalence from a symmetric Dirichlet");
  rs->add_option("--n", rs_args.n_out, "Resampled rows");
  rs->add_option("--seed", rs_args.seed, "Resampling seed");
  rs->add_flag("--drop-train", rs_args.drop_train, "Emit only the resampled rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (summ->parsed()) return cmd_summarize(sum_args);
    if (eval->parsed()) return cmd_evaluate(eval_args);
    if (rs->parsed()) return cmd_resample(rs_args);
  } catch (const va::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
