#include "vatensor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vatensor/error.hpp"
#include "vatensor/numeric.hpp"

namespace vatensor {

double csmf_accuracy(std::span<const double> pi_hat, std::span<const double> pi_true) {
  if (pi_hat.size() != pi_true.size() || pi_hat.empty()) {
    throw DimensionError("prevalence vectors must have the same nonzero length");
  }
  if (!is_simplex(pi_hat, 1e-8) || !is_simplex(pi_true, 1e-8)) {
    throw ValidationError("prevalence vectors must be probability simplexes");
  }
  double l1 = 0.0;
  double lo = pi_true[0];
  for (std::size_t c = 0; c < pi_true.size(); ++c) {
    l1 += std::abs(pi_hat[c] - pi_true[c]);
    lo = std::min(lo, pi_true[c]);
  }
  return 1.0 - l1 / (2.0 * (1.0 - lo));
}

double top_cause_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw DimensionError("prediction and truth must have the same nonzero length");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {
double choose2(double n) { return n * (n - 1.0) / 2.0; }
}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DimensionError("partitions must have the same length");
  if (a.empty()) throw DimensionError("partitions are empty");

  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> row_sums, col_sums;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1.0;
    row_sums[a[i]] += 1.0;
    col_sums[b[i]] += 1.0;
  }

  double sum_cells = 0.0;
  for (const auto& [key, count] : cells) sum_cells += choose2(count);
  double sum_rows = 0.0;
  for (const auto& [key, count] : row_sums) sum_rows += choose2(count);
  double sum_cols = 0.0;
  for (const auto& [key, count] : col_sums) sum_cols += choose2(count);

  const double pairs = choose2(static_cast<double>(a.size()));
  if (pairs == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / pairs;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  const double denom = maximum - expected;
  if (denom == 0.0) return 1.0;  // no pair information in either partition
  return (sum_cells - expected) / denom;
}

std::vector<double> cause_dissimilarity(std::span<const int> s_mode, int C, int p) {
  if (static_cast<std::size_t>(C) * p != s_mode.size() || C < 1 || p < 1) {
    throw DimensionError("grouping matrix shape mismatch");
  }
  std::vector<double> d(static_cast<std::size_t>(C) * C, 0.0);
  for (int a = 0; a < C; ++a) {
    for (int b = a + 1; b < C; ++b) {
      double ari = adjusted_rand_index(
          s_mode.subspan(static_cast<std::size_t>(a) * p, static_cast<std::size_t>(p)),
          s_mode.subspan(static_cast<std::size_t>(b) * p, static_cast<std::size_t>(p)));
      d[static_cast<std::size_t>(a) * C + b] = 1.0 - ari;
      d[static_cast<std::size_t>(b) * C + a] = 1.0 - ari;
    }
  }
  return d;
}

Dendrogram cause_dendrogram(std::span<const int> s_mode, int C, int p, Linkage linkage,
                            std::vector<std::string> leaf_names) {
  std::vector<double> dist = cause_dissimilarity(s_mode, C, p);

  Dendrogram tree;
  if (leaf_names.empty()) {
    for (int c = 0; c < C; ++c) tree.leaf_names.push_back("cause_" + std::to_string(c + 1));
  } else {
    if (static_cast<int>(leaf_names.size()) != C) {
      throw DimensionError("leaf name count must match the cause count");
    }
    tree.leaf_names = std::move(leaf_names);
  }
  if (C == 1) return tree;

  // Active clusters: node id and leaf count; work on a shrinking index list.
  std::vector<int> node(static_cast<std::size_t>(C));
  std::vector<int> size(static_cast<std::size_t>(C), 1);
  std::vector<bool> alive(static_cast<std::size_t>(C), true);
  for (int c = 0; c < C; ++c) node[static_cast<std::size_t>(c)] = c;

  auto dref = [&](int a, int b) -> double& {
    return dist[static_cast<std::size_t>(a) * C + b];
  };

  for (int m = 0; m < C - 1; ++m) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < C; ++a) {
      if (!alive[static_cast<std::size_t>(a)]) continue;
      for (int b = a + 1; b < C; ++b) {
        if (!alive[static_cast<std::size_t>(b)]) continue;
        if (dref(a, b) < best) {
          best = dref(a, b);
          bi = a;
          bj = b;
        }
      }
    }

    Dendrogram::Merge merge;
    merge.left = node[static_cast<std::size_t>(bi)];
    merge.right = node[static_cast<std::size_t>(bj)];
    merge.height = best;
    merge.size = size[static_cast<std::size_t>(bi)] + size[static_cast<std::size_t>(bj)];
    tree.merges.push_back(merge);

    // Lance-Williams update into slot bi.
    for (int k = 0; k < C; ++k) {
      if (!alive[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
      double dik = dref(std::min(bi, k), std::max(bi, k));
      double djk = dref(std::min(bj, k), std::max(bj, k));
      double merged;
      switch (linkage) {
        case Linkage::kSingle: merged = std::min(dik, djk); break;
        case Linkage::kComplete: merged = std::max(dik, djk); break;
        default: {
          double ni = size[static_cast<std::size_t>(bi)];
          double nj = size[static_cast<std::size_t>(bj)];
          merged = (ni * dik + nj * djk) / (ni + nj);
          break;
        }
      }
      dref(std::min(bi, k), std::max(bi, k)) = merged;
    }
    node[static_cast<std::size_t>(bi)] = C + m;
    size[static_cast<std::size_t>(bi)] = merge.size;
    alive[static_cast<std::size_t>(bj)] = false;
  }
  return tree;
}

namespace {

struct NewickNode {
  int left = -1, right = -1;
  double height = 0.0;
};

void write_newick(std::ostringstream& os, const Dendrogram& tree,
                  const std::vector<NewickNode>& nodes, int id, double parent_height) {
  const int C = static_cast<int>(tree.leaf_names.size());
  if (id < C) {
    os << tree.leaf_names[static_cast<std::size_t>(id)] << ':' << parent_height;
    return;
  }
  const NewickNode& nd = nodes[static_cast<std::size_t>(id - C)];
  os << '(';
  write_newick(os, tree, nodes, nd.left, nd.height);
  os << ',';
  write_newick(os, tree, nodes, nd.right, nd.height);
  os << "):" << parent_height - nd.height;
}

}  // namespace

std::string to_newick(const Dendrogram& tree) {
  const int C = static_cast<int>(tree.leaf_names.size());
  if (C == 1) return tree.leaf_names[0] + ";";
  std::vector<NewickNode> nodes(tree.merges.size());
  for (std::size_t m = 0; m < tree.merges.size(); ++m) {
    nodes[m].left = tree.merges[m].left;
    nodes[m].right = tree.merges[m].right;
    nodes[m].height = tree.merges[m].height;
  }
  std::ostringstream os;
  const int root = C + static_cast<int>(tree.merges.size()) - 1;
  const NewickNode& top = nodes.back();
  os << '(';
  write_newick(os, tree, nodes, top.left, top.height);
  os << ',';
  write_newick(os, tree, nodes, top.right, top.height);
  os << ");";
  (void)root;
  return os.str();
}

std::string dendrogram_json(const Dendrogram& tree) {
  nlohmann::json j;
  j["leaves"] = tree.leaf_names;
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : tree.merges) {
    merges.push_back({{"left", m.left},
                      {"right", m.right},
                      {"height", m.height},
                      {"size", m.size}});
  }
  j["merges"] = merges;
  return j.dump(2);
}

}  // namespace vatensor
