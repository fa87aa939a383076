#pragma once

#include <span>
#include <string>
#include <vector>

namespace vatensor {

// 1 - sum |pi_hat - pi_true| / (2 (1 - min pi_true)), clipped to [0, 1] only
// by the math itself. Both arguments must be simplexes.
double csmf_accuracy(std::span<const double> pi_hat, std::span<const double> pi_true);

// Fraction of exact matches.
double top_cause_accuracy(std::span<const int> predicted, std::span<const int> truth);

// Hubert-Arabie adjusted Rand index of two partitions of the same items.
// Degenerate pairs (no pair information in either partition) score 1.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

enum class Linkage { kAverage, kSingle, kComplete };

// Pairwise 1 - ARI between the grouping rows of two causes; C*C row-major.
std::vector<double> cause_dissimilarity(std::span<const int> s_mode, int C, int p);

struct Dendrogram {
  struct Merge {
    int left = 0;       // node id: leaves 0..C-1, merge i creates node C+i
    int right = 0;
    double height = 0;  // dissimilarity at which the pair merged
    int size = 0;       // leaves under the new node
  };
  std::vector<Merge> merges;  // C-1 entries
  std::vector<std::string> leaf_names;
};

// Agglomerates causes on 1 - ARI of their grouping rows.
Dendrogram cause_dendrogram(std::span<const int> s_mode, int C, int p,
                            Linkage linkage = Linkage::kAverage,
                            std::vector<std::string> leaf_names = {});

// Ultrametric Newick text with branch lengths.
std::string to_newick(const Dendrogram& tree);

// Merge list plus leaf names as a JSON object.
std::string dendrogram_json(const Dendrogram& tree);

}  // namespace vatensor
