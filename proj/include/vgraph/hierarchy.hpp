#pragma once

#include <utility>
#include <vector>

#include "vgraph/graph.hpp"
#include "vgraph/model.hpp"
#include "vgraph/training.hpp"

namespace vgraph {

// Tree of communities built from per-level branching factors (e.g. {5, 4}
// = 5 first-tier communities with 4 children each). Tree nodes are indexed
// level by level; the root is implicit (index -1) and carries no
// embedding. psi row i is the embedding of tree node i; the leaves are the
// finest communities.
class CommunityTree {
 public:
  explicit CommunityTree(std::vector<int> factors);

  int depth() const { return static_cast<int>(factors_.size()); }
  int node_count() const { return level_start_.back(); }
  int leaf_count() const { return node_count() - first_leaf(); }
  int first_leaf() const { return level_start_[depth() - 1]; }
  const std::vector<int>& factors() const { return factors_; }

  int parent(int node) const { return parent_[node]; }
  // children of `node` as [first, last); node == -1 addresses the root
  std::pair<int, int> child_range(int node) const;
  // 1-based level of a node
  int level_of(int node) const;
  int ancestor_at_level(int leaf_node, int level) const;
  int leaf_index(int leaf_node) const { return leaf_node - first_leaf(); }
  // first node index of a 1-based level
  int level_start(int level) const { return level_start_[level - 1]; }
  int level_size(int level) const {
    return level_start_[level] - level_start_[level - 1];
  }

 private:
  std::vector<int> factors_;
  std::vector<int> level_start_;  // depth()+1 entries, last = node_count
  std::vector<int> parent_;
};

// p(z-path|w): probability of every leaf as the product of level-wise
// softmax conditionals with logits phi_w . psi_child.
std::vector<double> path_prior(const ModelParams& p, const CommunityTree& t,
                               int w);

// Posterior over leaves, factorized like the prior on (phi_w ⊙ phi_c).
std::vector<double> path_posterior(const ModelParams& p,
                                   const CommunityTree& t, int w, int c);

// sum over leaves of p(c|leaf) p(leaf|w), full-softmax decoder keyed on
// the leaf embedding.
double hierarchical_edge_likelihood(const ModelParams& p,
                                    const CommunityTree& t, int w, int c);

enum class AssignMode { NonOverlapping, Overlapping };

// Community sets per level (element 0 = level 1, ..., depth). The leaf
// level applies the flat extraction rules to leaf posteriors; higher
// levels map each leaf to its ancestor.
std::vector<CommunitySet> assign_hierarchical(const ModelParams& p,
                                              const CommunityTree& t,
                                              const Graph& g, AssignMode mode);

// Same loop as the flat trainer with tree-structured latents: the path
// prior/posterior factorize over levels, each conditional is relaxed with
// its own Gumbel noise, and the decoder conditions on the leaf embedding.
// cfg.tree must be set; psi holds one row per tree node.
TrainedModel train_hierarchical(const Graph& g, const TrainConfig& cfg);

// Verification-mode counterpart of loss_with_draws for the hierarchical
// objective (draws.gumbel holds one value per tree node per pair).
LossBreakdown hierarchical_loss_with_draws(
    const ModelParams& p, const Graph& g, const CommunityTree& t,
    std::span<const OrderedPair> batch, const TrainConfig& cfg,
    const FixedDraws& draws, ForwardMode mode, TermMask mask,
    Gradients* grads);

}  // namespace vgraph
