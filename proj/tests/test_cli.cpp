#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "vatensor/io.hpp"
#include "vatensor/types.hpp"

namespace va = vatensor;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("vatensor_cli_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(VATENSOR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

void write_sim_config(const fs::path& path) {
  spit(path,
       "sim.C = 3\n"
       "sim.p = 6\n"
       "sim.r = 2\n"
       "sim.K = 2\n"
       "sim.h = 2\n"
       "sim.n_train = 50\n"
       "sim.n_target = 25\n"
       "sim.seed = 5\n");
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("version flag exits cleanly") {
  fs::path dir = scratch_dir("version");
  CHECK(run_cli("--version", dir / "log.txt") == 0);
  CHECK(slurp(dir / "log.txt").find('.') != std::string::npos);
}

TEST_CASE("simulate rejects a grouping that cannot tile the symptoms") {
  fs::path dir = scratch_dir("badsim");
  spit(dir / "sim.conf", "sim.C = 3\nsim.p = 7\nsim.r = 2\n");
  int rc = run_cli("simulate --config " + (dir / "sim.conf").string() + " --output " +
                       (dir / "out").string(),
                   dir / "log.txt");
  CHECK(rc == 2);
  CHECK(slurp(dir / "log.txt").find("divide") != std::string::npos);
}

TEST_CASE("simulate, fit, summarize, evaluate, and resample chain together") {
  fs::path dir = scratch_dir("e2e");
  write_sim_config(dir / "sim.conf");
  fs::path sim_dir = dir / "sim";

  REQUIRE(run_cli("simulate --config " + (dir / "sim.conf").string() + " --output " +
                      sim_dir.string(),
                  dir / "sim.log") == 0);
  for (const char* name :
       {"dataset.csv", "truth_y.csv", "truth_pi.csv", "truth_params.json", "manifest.json"}) {
    CHECK(fs::exists(sim_dir / name));
  }
  va::VADataset data = va::read_dataset_csv((sim_dir / "dataset.csv").string());
  CHECK(data.n == 75);
  CHECK(data.p == 6);
  CHECK(data.C == 3);

  json truth_params = load_json(sim_dir / "truth_params.json");
  CHECK(truth_params["C"] == 3);
  CHECK(truth_params["r"] == 2);
  CHECK(truth_params["s"].size() == 18);  // flat C*p grouping, 1-based labels

  fs::path fit_dir = dir / "fit";
  REQUIRE(run_cli("fit --data " + (sim_dir / "dataset.csv").string() + " --output " +
                      fit_dir.string() +
                      " --k 2 --r 2 --h 2 --iterations 100 --burnin 50 --seed 7 --store-phi",
                  dir / "fit.log") == 0);
  for (const char* name :
       {"csmf_estimate.csv", "individual_cause_probs.csv", "trace.csv", "manifest.json"}) {
    CHECK(fs::exists(fit_dir / name));
  }
  va::PosteriorDraws draws = va::read_draws((fit_dir / "draws").string());
  CHECK(draws.retained() == 50);
  CHECK(draws.K == 2);
  CHECK(draws.r == 2);
  CHECK(draws.h == 2);
  CHECK(draws.store_phi);
  CHECK(draws.family == va::ModelFamily::kCTucker);
  CHECK(draws.target_rows.size() == 25);

  // The estimate table is a simplex over the three causes.
  {
    std::ifstream est(fit_dir / "csmf_estimate.csv");
    std::string line;
    std::getline(est, line);
    CHECK(line == "cause,name,mean,lower,upper");
    double total = 0;
    int rows = 0;
    while (std::getline(est, line)) {
      auto first = line.find(',');
      auto second = line.find(',', first + 1);
      auto third = line.find(',', second + 1);
      total += std::stod(line.substr(second + 1, third - second - 1));
      ++rows;
    }
    CHECK(rows == 3);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  fs::path sum_dir = dir / "summary";
  REQUIRE(run_cli("summarize --draws " + (fit_dir / "draws").string() + " --output " +
                      sum_dir.string() + " --data " + (sim_dir / "dataset.csv").string(),
                  dir / "sum.log") == 0);
  for (const char* name :
       {"group_utilization.csv", "group_utilization_avg.csv", "class_utilization.csv",
        "selection.json", "group_class_weights.csv", "cause_dissimilarity.csv",
        "dendrogram.newick", "dendrogram.json", "symptom_topics.csv", "expanded_weights.csv",
        "expanded_profiles.csv", "manifest.json"}) {
    CHECK(fs::exists(sum_dir / name));
  }
  json selection = load_json(sum_dir / "selection.json");
  CHECK(selection["r"]["recommended"].get<int>() >= 1);
  CHECK(selection["r"]["recommended"].get<int>() <= 2);
  CHECK(selection["K"]["recommended"].get<int>() >= 1);
  CHECK(selection["K"]["achieved"].get<double>() >= 0.0);

  fs::path eval_dir = dir / "eval";
  REQUIRE(run_cli("evaluate --predictions " + (fit_dir / "individual_cause_probs.csv").string() +
                      " --truth " + (sim_dir / "truth_y.csv").string() + " --output " +
                      eval_dir.string(),
                  dir / "eval.log") == 0);
  json metrics = load_json(eval_dir / "metrics.json");
  CHECK(metrics["n_eval"] == 25);
  CHECK(metrics["C"] == 3);
  CHECK(metrics["top_cause_accuracy"].get<double>() >= 0.0);
  CHECK(metrics["top_cause_accuracy"].get<double>() <= 1.0);
  CHECK(metrics["csmf_accuracy"].get<double>() >= 0.0);
  CHECK(metrics["csmf_accuracy"].get<double>() <= 1.0);
  CHECK(metrics["pi_hat"].size() == 3);
  CHECK(metrics["pi_true"].size() == 3);
  CHECK(metrics["pi_hat_source"].is_string());

  fs::path rs_dir = dir / "resample";
  spit(dir / "prev.csv", "cause,prob\n1,0\n2,1\n3,0\n");
  REQUIRE(run_cli("resample --data " + (sim_dir / "dataset.csv").string() + " --prevalence " +
                      (dir / "prev.csv").string() + " --n 30 --seed 3 --drop-train --output " +
                      rs_dir.string(),
                  dir / "rs.log") == 0);
  va::VADataset resampled = va::read_dataset_csv((rs_dir / "dataset.csv").string());
  CHECK(resampled.n == 30);
  for (int i = 0; i < resampled.n; ++i) CHECK(resampled.domain[i] == 0);
  std::string truth_rs = slurp(rs_dir / "truth_y.csv");
  std::istringstream truth_lines(truth_rs);
  std::string line;
  std::getline(truth_lines, line);
  CHECK(line == "id,cause");
  while (std::getline(truth_lines, line)) {
    if (line.empty()) continue;
    CHECK(line.substr(line.find(',') + 1) == "2");
  }
}

TEST_CASE("fits with the same seed write identical draws") {
  fs::path dir = scratch_dir("repro");
  write_sim_config(dir / "sim.conf");
  REQUIRE(run_cli("simulate --config " + (dir / "sim.conf").string() + " --output " +
                      (dir / "sim").string(),
                  dir / "sim.log") == 0);
  const std::string fit_flags =
      " --k 2 --r 2 --h 2 --iterations 60 --burnin 30 --seed 11 --store-phi";
  REQUIRE(run_cli("fit --data " + (dir / "sim" / "dataset.csv").string() + " --output " +
                      (dir / "fit_a").string() + fit_flags,
                  dir / "a.log") == 0);
  REQUIRE(run_cli("fit --data " + (dir / "sim" / "dataset.csv").string() + " --output " +
                      (dir / "fit_b").string() + fit_flags,
                  dir / "b.log") == 0);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir / "fit_a" / "draws")) {
    files.push_back(entry.path().filename());
  }
  CHECK(!files.empty());
  for (const fs::path& name : files) {
    CHECK(slurp(dir / "fit_a" / "draws" / name) == slurp(dir / "fit_b" / "draws" / name));
  }
  CHECK(slurp(dir / "fit_a" / "csmf_estimate.csv") == slurp(dir / "fit_b" / "csmf_estimate.csv"));
}

TEST_CASE("fit refuses a training row without a label") {
  fs::path dir = scratch_dir("nolabel");
  spit(dir / "data.csv",
       "id,domain,cause,s_1,s_2\n"
       "a,train,1,0,1\n"
       "b,train,,1,1\n"
       "c,target,,0,0\n");
  int rc = run_cli("fit --data " + (dir / "data.csv").string() + " --output " +
                       (dir / "fit").string() + " --k 2 --r 1 --h 1 --iterations 10 --burnin 2",
                   dir / "log.txt");
  CHECK(rc == 2);
  CHECK_FALSE(fs::exists(dir / "fit" / "draws" / "meta.json"));
}

TEST_CASE("single-class single-group fits run as plain conditional independence") {
  fs::path dir = scratch_dir("ci");
  write_sim_config(dir / "sim.conf");
  REQUIRE(run_cli("simulate --config " + (dir / "sim.conf").string() + " --output " +
                      (dir / "sim").string(),
                  dir / "sim.log") == 0);
  REQUIRE(run_cli("fit --data " + (dir / "sim" / "dataset.csv").string() + " --output " +
                      (dir / "fit").string() +
                      " --family parafac --k 1 --iterations 20 --burnin 10 --seed 2",
                  dir / "fit.log") == 0);
  va::PosteriorDraws draws = va::read_draws((dir / "fit" / "draws").string());
  CHECK(draws.family == va::ModelFamily::kParafac);
  CHECK(draws.K == 1);
  CHECK(draws.r == 1);
  CHECK(draws.h == 1);
  CHECK(draws.retained() == 10);
}

TEST_CASE("evaluate reproduces hand-computed scores from flat files") {
  fs::path dir = scratch_dir("handeval");
  // Truth: causes 1,1,1,1,1,2,2,2,3,3. Predictions: frequencies (.3,.4,.3)
  // with seven exact matches.
  spit(dir / "truth.csv",
       "id,cause\nr1,1\nr2,1\nr3,1\nr4,1\nr5,1\nr6,2\nr7,2\nr8,2\nr9,3\nr10,3\n");
  spit(dir / "preds.csv",
       "id,cause\nr1,1\nr2,1\nr3,1\nr4,2\nr5,2\nr6,2\nr7,2\nr8,3\nr9,3\nr10,3\n");
  REQUIRE(run_cli("evaluate --predictions " + (dir / "preds.csv").string() + " --truth " +
                      (dir / "truth.csv").string() + " --output " + (dir / "out").string(),
                  dir / "log.txt") == 0);
  std::string printed = slurp(dir / "log.txt");
  CHECK(printed.find("top_cause_accuracy=0.700000") != std::string::npos);
  CHECK(printed.find("csmf_accuracy=0.750000") != std::string::npos);
  json metrics = load_json(dir / "out" / "metrics.json");
  CHECK(metrics["top_cause_accuracy"].get<double>() == doctest::Approx(0.7));
  CHECK(metrics["csmf_accuracy"].get<double>() == doctest::Approx(0.75));
  CHECK(metrics["n_eval"] == 10);
}

TEST_CASE("evaluate scores perfect predictions as one") {
  fs::path dir = scratch_dir("perfect");
  spit(dir / "truth.csv", "id,cause\nr1,1\nr2,2\nr3,2\nr4,1\n");
  REQUIRE(run_cli("evaluate --predictions " + (dir / "truth.csv").string() + " --truth " +
                      (dir / "truth.csv").string() + " --output " + (dir / "out").string(),
                  dir / "log.txt") == 0);
  json metrics = load_json(dir / "out" / "metrics.json");
  CHECK(metrics["top_cause_accuracy"].get<double>() == doctest::Approx(1.0));
  CHECK(metrics["csmf_accuracy"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("evaluate rejects predictions for unknown deaths") {
  fs::path dir = scratch_dir("unknown");
  spit(dir / "truth.csv", "id,cause\nr1,1\nr2,2\n");
  spit(dir / "preds.csv", "id,cause\nr1,1\nr9,2\n");
  CHECK(run_cli("evaluate --predictions " + (dir / "preds.csv").string() + " --truth " +
                    (dir / "truth.csv").string() + " --output " + (dir / "out").string(),
                dir / "log.txt") == 2);
}

TEST_CASE("summarize needs an existing draws directory") {
  fs::path dir = scratch_dir("nodraws");
  CHECK(run_cli("summarize --draws " + (dir / "absent").string() + " --output " +
                    (dir / "out").string(),
                dir / "log.txt") == 3);
}

TEST_CASE("resample can draw its prevalence from a concentration parameter") {
  fs::path dir = scratch_dir("dirres");
  write_sim_config(dir / "sim.conf");
  REQUIRE(run_cli("simulate --config " + (dir / "sim.conf").string() + " --output " +
                      (dir / "sim").string(),
                  dir / "sim.log") == 0);
  REQUIRE(run_cli("resample --data " + (dir / "sim" / "dataset.csv").string() +
                      " --dirichlet 5 --n 20 --seed 9 --output " + (dir / "out").string(),
                  dir / "log.txt") == 0);
  std::ifstream prev(dir / "out" / "prevalence.csv");
  std::string line;
  std::getline(prev, line);
  CHECK(line == "cause,prob");
  double total = 0;
  int rows = 0;
  while (std::getline(prev, line)) {
    if (line.empty()) continue;
    total += std::stod(line.substr(line.find(',') + 1));
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_SUITE_END();
