#include "vatensor/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vatensor/error.hpp"

namespace vatensor {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

long parse_long(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(text.c_str(), &end, 10);
  if (errno != 0 || end == text.c_str() || *end != '\0') {
    throw ValidationError(what + ": expected an integer, got \"" + text + "\"");
  }
  return v;
}

double parse_double(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw ValidationError(what + ": expected a number, got \"" + text + "\"");
  }
  return v;
}

}  // namespace

VADataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  line = strip_cr(line);
  std::vector<std::string> header = split(line, ',');
  if (header.size() < 4 || header[0] != "id" || header[1] != "domain" || header[2] != "cause") {
    throw ValidationError(path + ": header must start with id,domain,cause and list at least one symptom");
  }
  VADataset data;
  data.p = static_cast<int>(header.size()) - 3;
  data.symptom_names.assign(header.begin() + 3, header.end());

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                            " cells, got " + std::to_string(cells.size()));
    }
    data.ids.push_back(cells[0]);
    std::string dom = trim(cells[1]);
    if (dom == "train") {
      data.domain.push_back(1);
    } else if (dom == "target") {
      data.domain.push_back(0);
    } else {
      throw ValidationError(where + ": domain must be train or target, got \"" + dom + "\"");
    }
    std::string cause = trim(cells[2]);
    if (cause.empty() || cause == "NA") {
      data.y_obs.push_back(-1);
    } else {
      long label = parse_long(cause, where + " cause");
      if (label < 1) throw ValidationError(where + ": cause labels are 1-based");
      data.y_obs.push_back(static_cast<int>(label) - 1);
      data.C = std::max(data.C, static_cast<int>(label));
    }
    for (int j = 0; j < data.p; ++j) {
      std::string cell = trim(cells[3 + j]);
      if (cell.empty() || cell == "NA") {
        data.x.push_back(kMissing);
      } else if (cell == "0") {
        data.x.push_back(0);
      } else if (cell == "1") {
        data.x.push_back(1);
      } else {
        throw ValidationError(where + ": symptom cells must be 0, 1, or NA, got \"" + cell + "\"");
      }
    }
    ++data.n;
  }
  return data;
}

void write_dataset_csv(const std::string& path, const VADataset& data) {
  std::ostringstream out;
  out << "id,domain,cause";
  for (int j = 0; j < data.p; ++j) {
    if (j < static_cast<int>(data.symptom_names.size()) && !data.symptom_names[j].empty()) {
      out << ',' << data.symptom_names[j];
    } else {
      out << ",s_" << (j + 1);
    }
  }
  out << '\n';
  for (int i = 0; i < data.n; ++i) {
    if (i < static_cast<int>(data.ids.size()) && !data.ids[i].empty()) {
      out << data.ids[i];
    } else {
      out << "row_" << (i + 1);
    }
    out << ',' << (data.domain[i] ? "train" : "target") << ',';
    if (data.y_obs[i] >= 0) out << (data.y_obs[i] + 1);
    for (int j = 0; j < data.p; ++j) {
      std::int8_t v = data.x_at(i, j);
      out << ',';
      if (v == kMissing) {
        out << "NA";
      } else {
        out << static_cast<int>(v);
      }
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

bool KvConfig::has(const std::string& key) const {
  for (const auto& kv : items) {
    if (kv.first == key) return true;
  }
  return false;
}

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
  const std::string* found = nullptr;
  for (const auto& kv : items) {
    if (kv.first == key) found = &kv.second;
  }
  return found ? *found : fallback;
}

long KvConfig::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  return parse_long(get(key), "config key " + key);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  return parse_double(get(key), "config key " + key);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError("config key " + key + ": expected a boolean, got \"" + get(key) + "\"");
}

std::vector<double> KvConfig::get_list(const std::string& key) const {
  std::vector<double> out;
  if (!has(key)) return out;
  for (const std::string& part : split(get(key), ',')) {
    std::string cell = trim(part);
    if (cell.empty()) continue;
    out.push_back(parse_double(cell, "config key " + key));
  }
  return out;
}

void KvConfig::set(const std::string& key, const std::string& value) {
  for (auto& kv : items) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  items.emplace_back(key, value);
}

KvConfig parse_kv_text(const std::string& text) {
  KvConfig out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    }
    out.set(key, value);
  }
  return out;
}

KvConfig read_kv_config(const std::string& path) {
  return parse_kv_text(read_text(path));
}

ModelConfig model_config_from_kv(const KvConfig& kv, int dataset_C) {
  ModelConfig config;
  std::string fam = kv.get("model.family", "ctucker");
  auto parsed = parse_family(fam);
  if (!parsed) throw ValidationError("config key model.family: unknown family \"" + fam + "\"");
  config.family = *parsed;
  config.C = static_cast<int>(kv.get_int("model.C", dataset_C));
  config.K = static_cast<int>(kv.get_int("model.K", config.K));
  config.r = static_cast<int>(kv.get_int("model.r", config.r));
  config.h = static_cast<int>(kv.get_int("model.h", config.h));
  // Families that do not use a dimension pin it to 1 unless the file insists.
  if (config.family != ModelFamily::kCTucker && !kv.has("model.h")) config.h = 1;
  if (config.family == ModelFamily::kParafac && !kv.has("model.r")) config.r = 1;

  config.alpha = kv.get_list("model.alpha");
  if (config.alpha.size() == 1 && config.C > 1) {
    config.alpha.assign(static_cast<std::size_t>(config.C), config.alpha[0]);
  }
  config.dir_psi = kv.get_list("model.dir_psi");
  if (config.dir_psi.size() == 1 && config.K > 1) {
    config.dir_psi.assign(static_cast<std::size_t>(config.K), config.dir_psi[0]);
  }
  config.beta_phi_a = kv.get_double("model.beta_phi_a", config.beta_phi_a);
  config.beta_phi_b = kv.get_double("model.beta_phi_b", config.beta_phi_b);

  config.mcmc.iterations = static_cast<int>(kv.get_int("mcmc.iterations", config.mcmc.iterations));
  config.mcmc.burn_in = static_cast<int>(kv.get_int("mcmc.burn_in", config.mcmc.burn_in));
  config.mcmc.thinning = static_cast<int>(kv.get_int("mcmc.thinning", config.mcmc.thinning));
  config.mcmc.seed = static_cast<std::uint64_t>(kv.get_int("mcmc.seed", static_cast<long>(config.mcmc.seed)));
  config.mcmc.threads = static_cast<int>(kv.get_int("mcmc.threads", config.mcmc.threads));
  config.mcmc.store_phi = kv.get_bool("mcmc.store_phi", config.mcmc.store_phi);
  config.mcmc.store_s = kv.get_bool("mcmc.store_s", config.mcmc.store_s);
  config.mcmc.store_assignments = kv.get_bool("mcmc.store_assignments", config.mcmc.store_assignments);
  return config;
}

SimConfig sim_config_from_kv(const KvConfig& kv) {
  SimConfig sim;
  sim.C = static_cast<int>(kv.get_int("sim.C", sim.C));
  sim.p = static_cast<int>(kv.get_int("sim.p", sim.p));
  sim.n_train = static_cast<int>(kv.get_int("sim.n_train", sim.n_train));
  sim.n_target = static_cast<int>(kv.get_int("sim.n_target", sim.n_target));
  sim.K = static_cast<int>(kv.get_int("sim.K", sim.K));
  sim.r = static_cast<int>(kv.get_int("sim.r", sim.r));
  sim.h = static_cast<int>(kv.get_int("sim.h", sim.h));
  if (kv.has("sim.scenario")) {
    std::string sc = kv.get("sim.scenario");
    std::transform(sc.begin(), sc.end(), sc.begin(), [](unsigned char c) { return std::tolower(c); });
    if (sc == "1" || sc == "i" || sc == "stable") {
      sim.scenario = Scenario::kStable;
    } else if (sc == "2" || sc == "ii" || sc == "shifted") {
      sim.scenario = Scenario::kShifted;
    } else {
      throw ValidationError("config key sim.scenario: expected stable or shifted, got \"" + kv.get("sim.scenario") + "\"");
    }
  }
  sim.beta_min = static_cast<int>(kv.get_int("sim.beta_min", sim.beta_min));
  sim.beta_max = static_cast<int>(kv.get_int("sim.beta_max", sim.beta_max));
  sim.seed = static_cast<std::uint64_t>(kv.get_int("sim.seed", static_cast<long>(sim.seed)));
  return sim;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t fnv1a_file(const std::string& path) {
  return fnv1a(read_text(path));
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

std::string shard_name(int sweep_1based) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "draw_%06d.csv", sweep_1based);
  return buf;
}

void emit(std::ostringstream& out, const char* param, int i1, int i2, int i3, int i4,
          const std::string& value) {
  out << param << ',';
  if (i1 > 0) out << i1;
  out << ',';
  if (i2 > 0) out << i2;
  out << ',';
  if (i3 > 0) out << i3;
  out << ',';
  if (i4 > 0) out << i4;
  out << ',' << value << '\n';
}

std::string shard_text(const PosteriorDraws& draws, const ParamSnapshot& snap) {
  const int C = draws.C, K = draws.K, r = draws.r, h = draws.h, p = draws.p;
  std::ostringstream out;
  out << "param,i1,i2,i3,i4,value\n";
  emit(out, "iteration", 0, 0, 0, 0, std::to_string(snap.iteration));
  emit(out, "joint_logp", 0, 0, 0, 0, format_double(snap.joint_logp));
  for (int c = 0; c < C; ++c) emit(out, "pi0", c + 1, 0, 0, 0, format_double(snap.pi0[c]));
  for (int c = 0; c < C; ++c) emit(out, "pi1", c + 1, 0, 0, 0, format_double(snap.pi1[c]));
  if (!snap.nu.empty()) {
    for (int c = 0; c < C; ++c)
      for (int l = 0; l < h; ++l)
        emit(out, "nu", c + 1, l + 1, 0, 0, format_double(snap.nu[static_cast<std::size_t>(c) * h + l]));
  }
  if (!snap.psi.empty()) {
    for (int c = 0; c < C; ++c)
      for (int l = 0; l < h; ++l)
        for (int s = 0; s < r; ++s)
          for (int k = 0; k < K; ++k)
            emit(out, "psi", c + 1, l + 1, s + 1, k + 1,
                 format_double(snap.psi[((static_cast<std::size_t>(c) * h + l) * r + s) * K + k]));
  }
  if (!snap.lambda.empty()) {
    for (int c = 0; c < C; ++c)
      for (int s = 0; s < r; ++s)
        for (int k = 0; k < K; ++k)
          emit(out, "lambda", c + 1, s + 1, k + 1, 0,
               format_double(snap.lambda[(static_cast<std::size_t>(c) * r + s) * K + k]));
  }
  for (int c = 0; c < C; ++c)
    for (int s = 0; s < r; ++s)
      emit(out, "xi", c + 1, s + 1, 0, 0, format_double(snap.xi[static_cast<std::size_t>(c) * r + s]));
  for (int c = 0; c < C; ++c)
    for (int s = 0; s < r; ++s)
      for (int k = 0; k < K; ++k)
        emit(out, "class_occ", c + 1, s + 1, k + 1, 0,
             std::to_string(static_cast<int>(snap.class_occ[(static_cast<std::size_t>(c) * r + s) * K + k])));
  if (!snap.phi.empty()) {
    for (int c = 0; c < C; ++c)
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j)
          emit(out, "phi", c + 1, k + 1, j + 1, 0,
               format_double(snap.phi[(static_cast<std::size_t>(c) * K + k) * p + j]));
  }
  if (!snap.s.empty()) {
    for (int c = 0; c < C; ++c)
      for (int j = 0; j < p; ++j)
        emit(out, "s", c + 1, j + 1, 0, 0,
             std::to_string(snap.s[static_cast<std::size_t>(c) * p + j] + 1));
  }
  if (!snap.y.empty()) {
    for (int i = 0; i < draws.n; ++i)
      emit(out, "y", i + 1, 0, 0, 0, std::to_string(snap.y[i] + 1));
    for (int i = 0; i < draws.n; ++i)
      for (int s = 0; s < r; ++s)
        emit(out, "z", i + 1, s + 1, 0, 0,
             std::to_string(snap.z[static_cast<std::size_t>(i) * r + s] + 1));
    for (int i = 0; i < draws.n; ++i)
      emit(out, "h", i + 1, 0, 0, 0, std::to_string(snap.h[i] + 1));
  }
  return out.str();
}

}  // namespace

void write_draws(const std::string& dir, const PosteriorDraws& draws) {
  fs::create_directories(dir);
  json meta;
  meta["schema_version"] = 1;
  meta["family"] = family_name(draws.family);
  meta["C"] = draws.C;
  meta["K"] = draws.K;
  meta["r"] = draws.r;
  meta["h"] = draws.h;
  meta["p"] = draws.p;
  meta["n"] = draws.n;
  meta["seed"] = draws.seed;
  meta["config_hash"] = hex64(draws.config_hash);
  meta["iterations"] = draws.iterations;
  meta["burn_in"] = draws.burn_in;
  meta["thinning"] = draws.thinning;
  meta["store_phi"] = draws.store_phi;
  meta["store_s"] = draws.store_s;
  meta["store_assignments"] = draws.store_assignments;
  meta["retained"] = draws.retained();
  json rows = json::array();
  for (int row : draws.target_rows) rows.push_back(row + 1);
  meta["target_rows"] = std::move(rows);
  write_text_atomic(dir + "/meta.json", meta.dump(2) + "\n");

  std::ostringstream index;
  index << "sweep,iteration,file\n";
  for (int t = 0; t < draws.retained(); ++t) {
    index << (t + 1) << ',' << draws.draws[t].iteration << ',' << shard_name(t + 1) << '\n';
    write_text_atomic(dir + "/" + shard_name(t + 1), shard_text(draws, draws.draws[t]));
  }
  write_text_atomic(dir + "/index.csv", index.str());

  std::ostringstream mass;
  mass << "row,cause,prob_sum,draw_count\n";
  const int C = draws.C;
  for (std::size_t t = 0; t < draws.target_rows.size(); ++t) {
    for (int c = 0; c < C; ++c) {
      std::size_t at = t * C + c;
      mass << (draws.target_rows[t] + 1) << ',' << (c + 1) << ','
           << format_double(draws.y_prob_sum[at]) << ',' << draws.y_draw_count[at] << '\n';
    }
  }
  write_text_atomic(dir + "/cause_mass.csv", mass.str());
}

namespace {

int index_or_throw(const std::string& cell, int limit, const std::string& where) {
  long v = parse_long(cell, where);
  if (v < 1 || v > limit) {
    throw IoError(where + ": index " + std::to_string(v) + " out of range 1.." + std::to_string(limit));
  }
  return static_cast<int>(v) - 1;
}

}  // namespace

PosteriorDraws read_draws(const std::string& dir) {
  json meta;
  try {
    meta = json::parse(read_text(dir + "/meta.json"));
  } catch (const json::exception& e) {
    throw IoError(dir + "/meta.json: " + e.what());
  }
  PosteriorDraws out;
  std::string fam = meta.at("family").get<std::string>();
  auto parsed = parse_family(fam);
  if (!parsed) throw IoError(dir + "/meta.json: unknown family \"" + fam + "\"");
  out.family = *parsed;
  out.C = meta.at("C").get<int>();
  out.K = meta.at("K").get<int>();
  out.r = meta.at("r").get<int>();
  out.h = meta.at("h").get<int>();
  out.p = meta.at("p").get<int>();
  out.n = meta.at("n").get<int>();
  out.seed = meta.at("seed").get<std::uint64_t>();
  out.config_hash = std::strtoull(meta.at("config_hash").get<std::string>().c_str(), nullptr, 16);
  out.iterations = meta.at("iterations").get<int>();
  out.burn_in = meta.at("burn_in").get<int>();
  out.thinning = meta.at("thinning").get<int>();
  out.store_phi = meta.at("store_phi").get<bool>();
  out.store_s = meta.at("store_s").get<bool>();
  out.store_assignments = meta.at("store_assignments").get<bool>();
  for (const auto& row : meta.at("target_rows")) {
    out.target_rows.push_back(row.get<int>() - 1);
  }
  const int C = out.C, K = out.K, r = out.r, h = out.h, p = out.p, n = out.n;
  if (C < 1 || K < 1 || r < 1 || h < 1 || p < 1 || n < 0) {
    throw IoError(dir + "/meta.json: bad dimensions");
  }

  std::istringstream index(read_text(dir + "/index.csv"));
  std::string line;
  if (!std::getline(index, line) || strip_cr(line) != "sweep,iteration,file") {
    throw IoError(dir + "/index.csv: bad header");
  }
  std::vector<std::string> files;
  while (std::getline(index, line)) {
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (cells.size() != 3) throw IoError(dir + "/index.csv: expected 3 cells per row");
    files.push_back(cells[2]);
  }

  bool coupled = out.family == ModelFamily::kCTucker;
  for (const std::string& file : files) {
    std::string where = dir + "/" + file;
    std::istringstream shard(read_text(where));
    if (!std::getline(shard, line) || strip_cr(line) != "param,i1,i2,i3,i4,value") {
      throw IoError(where + ": bad header");
    }
    ParamSnapshot snap;
    snap.pi0.assign(C, 0.0);
    snap.pi1.assign(C, 0.0);
    if (coupled) {
      snap.nu.assign(static_cast<std::size_t>(C) * h, 0.0);
      snap.psi.assign(static_cast<std::size_t>(C) * h * r * K, 0.0);
    } else {
      snap.lambda.assign(static_cast<std::size_t>(C) * r * K, 0.0);
    }
    snap.xi.assign(static_cast<std::size_t>(C) * r, 0.0);
    snap.class_occ.assign(static_cast<std::size_t>(C) * r * K, 0);
    if (out.store_phi) snap.phi.assign(static_cast<std::size_t>(C) * K * p, 0.0);
    if (out.store_s) snap.s.assign(static_cast<std::size_t>(C) * p, 0);
    if (out.store_assignments) {
      snap.y.assign(n, 0);
      snap.z.assign(static_cast<std::size_t>(n) * r, 0);
      snap.h.assign(n, 0);
    }
    while (std::getline(shard, line)) {
      line = strip_cr(line);
      if (trim(line).empty()) continue;
      std::vector<std::string> cells = split(line, ',');
      if (cells.size() != 6) throw IoError(where + ": expected 6 cells per row");
      const std::string& param = cells[0];
      const std::string& value = cells[5];
      if (param == "iteration") {
        snap.iteration = static_cast<int>(parse_long(value, where));
      } else if (param == "joint_logp") {
        snap.joint_logp = parse_double(value, where);
      } else if (param == "pi0" || param == "pi1") {
        int c = index_or_throw(cells[1], C, where);
        (param == "pi0" ? snap.pi0 : snap.pi1)[c] = parse_double(value, where);
      } else if (param == "nu") {
        if (!coupled) throw IoError(where + ": nu row in an uncoupled family");
        int c = index_or_throw(cells[1], C, where);
        int l = index_or_throw(cells[2], h, where);
        snap.nu[static_cast<std::size_t>(c) * h + l] = parse_double(value, where);
      } else if (param == "psi") {
        if (!coupled) throw IoError(where + ": psi row in an uncoupled family");
        int c = index_or_throw(cells[1], C, where);
        int l = index_or_throw(cells[2], h, where);
        int s = index_or_throw(cells[3], r, where);
        int k = index_or_throw(cells[4], K, where);
        snap.psi[((static_cast<std::size_t>(c) * h + l) * r + s) * K + k] = parse_double(value, where);
      } else if (param == "lambda") {
        if (coupled) throw IoError(where + ": lambda row in the coupled family");
        int c = index_or_throw(cells[1], C, where);
        int s = index_or_throw(cells[2], r, where);
        int k = index_or_throw(cells[3], K, where);
        snap.lambda[(static_cast<std::size_t>(c) * r + s) * K + k] = parse_double(value, where);
      } else if (param == "xi") {
        int c = index_or_throw(cells[1], C, where);
        int s = index_or_throw(cells[2], r, where);
        snap.xi[static_cast<std::size_t>(c) * r + s] = parse_double(value, where);
      } else if (param == "class_occ") {
        int c = index_or_throw(cells[1], C, where);
        int s = index_or_throw(cells[2], r, where);
        int k = index_or_throw(cells[3], K, where);
        snap.class_occ[(static_cast<std::size_t>(c) * r + s) * K + k] =
            static_cast<std::uint8_t>(parse_long(value, where));
      } else if (param == "phi") {
        if (snap.phi.empty()) throw IoError(where + ": phi row but store_phi is off");
        int c = index_or_throw(cells[1], C, where);
        int k = index_or_throw(cells[2], K, where);
        int j = index_or_throw(cells[3], p, where);
        snap.phi[(static_cast<std::size_t>(c) * K + k) * p + j] = parse_double(value, where);
      } else if (param == "s") {
        if (snap.s.empty()) throw IoError(where + ": s row but store_s is off");
        int c = index_or_throw(cells[1], C, where);
        int j = index_or_throw(cells[2], p, where);
        snap.s[static_cast<std::size_t>(c) * p + j] = index_or_throw(cells[5], r, where);
      } else if (param == "y") {
        if (snap.y.empty()) throw IoError(where + ": y row but store_assignments is off");
        int i = index_or_throw(cells[1], n, where);
        snap.y[i] = index_or_throw(cells[5], C, where);
      } else if (param == "z") {
        if (snap.z.empty()) throw IoError(where + ": z row but store_assignments is off");
        int i = index_or_throw(cells[1], n, where);
        int s = index_or_throw(cells[2], r, where);
        snap.z[static_cast<std::size_t>(i) * r + s] = index_or_throw(cells[5], K, where);
      } else if (param == "h") {
        if (snap.h.empty()) throw IoError(where + ": h row but store_assignments is off");
        int i = index_or_throw(cells[1], n, where);
        snap.h[i] = index_or_throw(cells[5], h, where);
      } else {
        throw IoError(where + ": unknown param \"" + param + "\"");
      }
    }
    out.draws.push_back(std::move(snap));
  }

  int expected = meta.at("retained").get<int>();
  if (out.retained() != expected) {
    throw IoError(dir + ": meta.json lists " + std::to_string(expected) + " retained sweeps, found " +
                  std::to_string(out.retained()));
  }

  out.y_prob_sum.assign(out.target_rows.size() * static_cast<std::size_t>(C), 0.0);
  out.y_draw_count.assign(out.target_rows.size() * static_cast<std::size_t>(C), 0);
  if (fs::exists(dir + "/cause_mass.csv")) {
    std::istringstream mass(read_text(dir + "/cause_mass.csv"));
    if (!std::getline(mass, line) || strip_cr(line) != "row,cause,prob_sum,draw_count") {
      throw IoError(dir + "/cause_mass.csv: bad header");
    }
    while (std::getline(mass, line)) {
      line = strip_cr(line);
      if (trim(line).empty()) continue;
      std::vector<std::string> cells = split(line, ',');
      if (cells.size() != 4) throw IoError(dir + "/cause_mass.csv: expected 4 cells per row");
      long row = parse_long(cells[0], dir + "/cause_mass.csv") - 1;
      auto it = std::find(out.target_rows.begin(), out.target_rows.end(), static_cast<int>(row));
      if (it == out.target_rows.end()) {
        throw IoError(dir + "/cause_mass.csv: row " + cells[0] + " is not an unlabeled row");
      }
      std::size_t t = static_cast<std::size_t>(it - out.target_rows.begin());
      int c = index_or_throw(cells[1], C, dir + "/cause_mass.csv");
      out.y_prob_sum[t * C + c] = parse_double(cells[2], dir + "/cause_mass.csv");
      out.y_draw_count[t * C + c] =
          static_cast<std::uint32_t>(parse_long(cells[3], dir + "/cause_mass.csv"));
    }
  }
  return out;
}

std::vector<int> read_group_matrix(const std::string& path, int C, int p) {
  std::istringstream in(read_text(path));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(C) * p);
  std::string line;
  int row = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    std::string where = path + ":" + std::to_string(line_no);
    if (static_cast<int>(cells.size()) != p) {
      throw ValidationError(where + ": expected " + std::to_string(p) + " cells, got " +
                            std::to_string(cells.size()));
    }
    for (const std::string& cell : cells) {
      long g = parse_long(trim(cell), where);
      if (g < 1) throw ValidationError(where + ": group labels are 1-based");
      out.push_back(static_cast<int>(g) - 1);
    }
    ++row;
  }
  if (row != C) {
    throw ValidationError(path + ": expected " + std::to_string(C) + " rows, got " + std::to_string(row));
  }
  return out;
}

}  // namespace vatensor
