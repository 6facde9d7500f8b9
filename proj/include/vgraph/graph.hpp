#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vgraph/common.hpp"

namespace vgraph {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Immutable undirected simple graph with dense node indexing. External
// labels are arbitrary strings; dense indices follow first-seen order.
struct Graph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;       // undirected, u < v not required
  std::vector<std::vector<int>> adjacency;      // sorted neighbor lists
  std::vector<std::string> labels;              // dense index -> external label
  std::unordered_map<std::string, int> label_index;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_dropped = 0;

  std::size_t edge_count() const { return edges.size(); }
  int degree(int v) const { return static_cast<int>(adjacency[v].size()); }
  std::span<const int> neighbors(int v) const { return adjacency[v]; }
  bool adjacent(int u, int v) const;

  // Throws std::logic_error if an internal invariant is broken (test aid).
  void check_invariants() const;
};

// Builds a Graph from labeled endpoint pairs, dropping self-loops and
// duplicate edges (orientation-insensitive).
Graph build_graph(const std::vector<std::pair<std::string, std::string>>& raw);

// Edge list: one edge per line, two whitespace-separated labels; blank
// lines and `#` comments allowed. Malformed lines raise ParseError.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);

// Community -> node-set mapping plus per-node membership lists. Nodes may
// be unassigned (empty membership); non-overlapping sets assign each node
// to at most one community.
struct CommunitySet {
  int k = 0;
  std::vector<std::vector<int>> members;     // per community, sorted
  std::vector<std::vector<int>> membership;  // per node, sorted

  static CommunitySet from_members(int k, int node_count,
                                   std::vector<std::vector<int>> members);
  bool overlapping() const;
  // True when every node belongs to exactly one community.
  bool is_partition() const;
  int assigned_count() const;
  void check_invariants() const;
};

// SNAP cmty format: one community per line, whitespace-separated node
// labels. Labels absent from the graph are dropped and counted into
// `unknown_dropped` when provided. `skip_first_token` handles ego-network
// circle files whose lines start with a circle name.
CommunitySet load_communities(std::istream& in, const Graph& g,
                              bool skip_first_token = false,
                              std::size_t* unknown_dropped = nullptr);
CommunitySet load_communities_file(const std::string& path, const Graph& g,
                                   bool skip_first_token = false,
                                   std::size_t* unknown_dropped = nullptr);
void write_communities(std::ostream& out, const CommunitySet& cs,
                       const Graph& g);

// |N(w) ∩ N(c)| / |N(w) ∪ N(c)|; 0 when the union is empty.
double jaccard_coefficient(const Graph& g, int w, int c);

// Noise distribution over nodes with weight deg(v)^0.75.
struct NoiseDistribution {
  explicit NoiseDistribution(const Graph& g);
  int sample(Rng& rng) const;
  double probability(int v) const;  // exact normalized weight

  std::vector<double> cumulative;  // strictly increasing to total
  double total = 0.0;
};

std::vector<int> sample_negatives(const Graph& g, const NoiseDistribution& nd,
                                  std::size_t m, Rng& rng);

// Planted-partition generator: n nodes in k near-equal blocks; each
// within-block pair is an edge with probability p_in, cross-block pairs
// with p_out. Returns the planted partition as ground truth.
std::pair<Graph, CommunitySet> generate_sbm(int n, int k, double p_in,
                                            double p_out, std::uint64_t seed);

// Two-level planted partition: `supers` super-blocks each split into
// `subs_per_super` sub-blocks. Returns (graph, fine partition, coarse
// partition).
struct NestedSbm {
  Graph graph;
  CommunitySet fine;
  CommunitySet coarse;
};
NestedSbm generate_nested_sbm(int n, int supers, int subs_per_super,
                              double p_sub, double p_super, double p_out,
                              std::uint64_t seed);

}  // namespace vgraph
