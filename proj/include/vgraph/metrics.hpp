#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vgraph/graph.hpp"
#include "vgraph/matrix.hpp"

namespace vgraph {

// Per-node class labels for the classification task; nodes without a
// label are skipped.
struct LabelSet {
  std::vector<std::optional<int>> label;   // per dense node index
  std::vector<std::string> class_names;    // class id -> name

  int labeled_count() const;
  int class_count() const { return static_cast<int>(class_names.size()); }
};

// Label file: one node per line, "<node-label> <class-label>".
LabelSet load_labels(std::istream& in, const Graph& g,
                     std::size_t* unknown_dropped = nullptr);
LabelSet load_labels_file(const std::string& path, const Graph& g,
                          std::size_t* unknown_dropped = nullptr);

// Mutual information normalized by the arithmetic mean of the entropies.
// Both arguments must assign each node to at most one community; nodes
// assigned on both sides form the evaluation set. 0/0 (two single-cluster
// partitions) is defined as 1.
double nmi(const CommunitySet& a, const CommunitySet& b);

// Newman modularity Q = sum_c (l_c/m - (d_c/2m)^2). Unassigned nodes are
// excluded from every community; m counts all graph edges.
double modularity(const Graph& g, const CommunitySet& partition);

// Symmetric best-match score: the average, over both directions, of the
// mean best F1 overlap between a community and the other side's
// communities. Empty predicted communities are skipped.
double overlapping_f1(const CommunitySet& pred, const CommunitySet& truth);

// Same matching with Jaccard overlap in place of F1.
double overlapping_jaccard(const CommunitySet& pred,
                           const CommunitySet& truth);

struct ClassificationScores {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  int train_count = 0;
  int test_count = 0;
  bool missing_train_class = false;  // some class absent from training
};

// One-vs-rest logistic regression (L2 penalty, strength 1.0) on a random
// train_fraction split of the labeled nodes; Micro/Macro-F1 on the rest.
// Deterministic given the seed.
ClassificationScores classify_nodes(const Matrix& embeddings,
                                    const LabelSet& labels,
                                    double train_fraction,
                                    std::uint64_t seed);

}  // namespace vgraph
