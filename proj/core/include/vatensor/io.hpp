#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vatensor/synth.hpp"
#include "vatensor/types.hpp"

namespace vatensor {

// Shortest round-trippable decimal form ("%.17g").
std::string format_double(double v);

// Dataset CSV: header `id,domain,cause,<symptom names>`; domain is train or
// target; cause is a 1-based label, empty (or NA) on target rows; symptom
// cells are 0, 1, or NA. C is taken as the largest label seen.
VADataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const VADataset& data);

// Flat `key = value` configuration with dotted sections and # comments.
// Later occurrences of a key win; insertion order is preserved for echoing.
struct KvConfig {
  std::vector<std::pair<std::string, std::string>> items;

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback = "") const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
};

KvConfig parse_kv_text(const std::string& text);
KvConfig read_kv_config(const std::string& path);

// model.* / mcmc.* keys -> ModelConfig. dataset_C fills model.C when the file
// does not pin it. Families that fix r or h get those dimensions coerced
// unless the file sets them explicitly.
ModelConfig model_config_from_kv(const KvConfig& kv, int dataset_C);

// sim.* keys -> SimConfig.
SimConfig sim_config_from_kv(const KvConfig& kv);

// Whole-file write via a temp file and rename.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t fnv1a_file(const std::string& path);
std::string hex64(std::uint64_t value);

// Retained sweeps as one CSV shard per sweep plus meta.json, index.csv, and
// cause_mass.csv (the accumulated cause masses for unlabeled rows). Indices
// in the files are 1-based. read_draws restores the full structure.
void write_draws(const std::string& dir, const PosteriorDraws& draws);
PosteriorDraws read_draws(const std::string& dir);

// C rows by p columns of 1-based group labels.
std::vector<int> read_group_matrix(const std::string& path, int C, int p);

}  // namespace vatensor
