#include "vgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace vgraph {

bool Graph::adjacent(int u, int v) const {
  const auto& a = adjacency[u];
  return std::binary_search(a.begin(), a.end(), v);
}

void Graph::check_invariants() const {
  if (static_cast<int>(adjacency.size()) != node_count ||
      static_cast<int>(labels.size()) != node_count)
    throw std::logic_error("graph: size mismatch");
  std::size_t degree_sum = 0;
  for (int v = 0; v < node_count; ++v) {
    const auto& a = adjacency[v];
    if (!std::is_sorted(a.begin(), a.end()))
      throw std::logic_error("graph: adjacency not sorted");
    if (std::adjacent_find(a.begin(), a.end()) != a.end())
      throw std::logic_error("graph: duplicate neighbor");
    for (int u : a) {
      if (u < 0 || u >= node_count) throw std::logic_error("graph: bad index");
      if (u == v) throw std::logic_error("graph: self-loop");
      if (!adjacent(u, v)) throw std::logic_error("graph: asymmetric adjacency");
    }
    degree_sum += a.size();
  }
  if (edges.size() * 2 != degree_sum)
    throw std::logic_error("graph: edge count mismatch");
  for (auto [u, v] : edges)
    if (u < 0 || u >= node_count || v < 0 || v >= node_count)
      throw std::logic_error("graph: edge endpoint out of range");
}

Graph build_graph(
    const std::vector<std::pair<std::string, std::string>>& raw) {
  Graph g;
  auto intern = [&](const std::string& label) {
    auto [it, inserted] = g.label_index.try_emplace(
        label, static_cast<int>(g.labels.size()));
    if (inserted) g.labels.push_back(label);
    return it->second;
  };
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : raw) {
    const int u = intern(a);
    const int v = intern(b);
    if (u == v) {
      ++g.self_loops_dropped;
      continue;
    }
    const auto key = std::minmax(u, v);
    if (!seen.insert(key).second) {
      ++g.duplicate_edges_dropped;
      continue;
    }
    g.edges.emplace_back(u, v);
  }
  g.node_count = static_cast<int>(g.labels.size());
  g.adjacency.resize(g.node_count);
  for (auto [u, v] : g.edges) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  return g;
}

Graph load_edge_list(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream iss(line);
    std::string a, b, extra;
    if (!(iss >> a)) continue;          // blank line
    if (a[0] == '#') continue;          // comment
    if (!(iss >> b) || (iss >> extra))
      throw ParseError("expected exactly two node labels", lineno);
    raw.emplace_back(std::move(a), std::move(b));
  }
  return build_graph(raw);
}

Graph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge file: " + path);
  return load_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  for (auto [u, v] : g.edges)
    out << g.labels[u] << ' ' << g.labels[v] << '\n';
}

CommunitySet CommunitySet::from_members(
    int k, int node_count, std::vector<std::vector<int>> members) {
  CommunitySet cs;
  cs.k = k;
  cs.members = std::move(members);
  if (static_cast<int>(cs.members.size()) != k)
    throw std::invalid_argument("community set: wrong number of communities");
  cs.membership.resize(node_count);
  for (int c = 0; c < k; ++c) {
    auto& m = cs.members[c];
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    for (int v : m) {
      if (v < 0 || v >= node_count)
        throw std::invalid_argument("community set: node index out of range");
      cs.membership[v].push_back(c);
    }
  }
  return cs;
}

bool CommunitySet::overlapping() const {
  for (const auto& m : membership)
    if (m.size() > 1) return true;
  return false;
}

bool CommunitySet::is_partition() const {
  for (const auto& m : membership)
    if (m.size() != 1) return false;
  return true;
}

int CommunitySet::assigned_count() const {
  int n = 0;
  for (const auto& m : membership)
    if (!m.empty()) ++n;
  return n;
}

void CommunitySet::check_invariants() const {
  if (static_cast<int>(members.size()) != k)
    throw std::logic_error("community set: k mismatch");
  std::size_t forward = 0, backward = 0;
  for (int c = 0; c < k; ++c)
    for (int v : members[c]) {
      ++forward;
      const auto& m = membership[v];
      if (!std::binary_search(m.begin(), m.end(), c))
        throw std::logic_error("community set: members/membership mismatch");
    }
  for (const auto& m : membership) backward += m.size();
  if (forward != backward)
    throw std::logic_error("community set: inconsistent sizes");
}

CommunitySet load_communities(std::istream& in, const Graph& g,
                              bool skip_first_token,
                              std::size_t* unknown_dropped) {
  std::vector<std::vector<int>> members;
  std::size_t unknown = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream iss(line);
    std::string tok;
    std::vector<int> community;
    bool first = true;
    while (iss >> tok) {
      if (first && tok[0] == '#') break;
      if (first && skip_first_token) {
        first = false;
        continue;
      }
      first = false;
      auto it = g.label_index.find(tok);
      if (it == g.label_index.end()) {
        ++unknown;
        continue;
      }
      community.push_back(it->second);
    }
    if (!community.empty()) members.push_back(std::move(community));
  }
  if (unknown_dropped) *unknown_dropped = unknown;
  return CommunitySet::from_members(static_cast<int>(members.size()),
                                    g.node_count, std::move(members));
}

CommunitySet load_communities_file(const std::string& path, const Graph& g,
                                   bool skip_first_token,
                                   std::size_t* unknown_dropped) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open community file: " + path);
  return load_communities(in, g, skip_first_token, unknown_dropped);
}

void write_communities(std::ostream& out, const CommunitySet& cs,
                       const Graph& g) {
  for (const auto& community : cs.members) {
    if (community.empty()) continue;
    for (std::size_t i = 0; i < community.size(); ++i) {
      if (i) out << ' ';
      out << g.labels[community[i]];
    }
    out << '\n';
  }
}

double jaccard_coefficient(const Graph& g, int w, int c) {
  if (w < 0 || w >= g.node_count || c < 0 || c >= g.node_count)
    throw std::out_of_range("jaccard_coefficient: node index out of range");
  const auto& a = g.adjacency[w];
  const auto& b = g.adjacency[c];
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

NoiseDistribution::NoiseDistribution(const Graph& g) {
  if (g.edges.empty())
    throw std::invalid_argument(
        "noise distribution undefined on a graph with no edges");
  cumulative.resize(g.node_count);
  double acc = 0.0;
  for (int v = 0; v < g.node_count; ++v) {
    acc += std::pow(static_cast<double>(g.degree(v)), 0.75);
    cumulative[v] = acc;
  }
  total = acc;
}

int NoiseDistribution::sample(Rng& rng) const {
  const double x = rng.uniform() * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  if (it == cumulative.end()) --it;  // guard against x == total roundoff
  return static_cast<int>(it - cumulative.begin());
}

double NoiseDistribution::probability(int v) const {
  const double prev = v == 0 ? 0.0 : cumulative[v - 1];
  return (cumulative[v] - prev) / total;
}

std::vector<int> sample_negatives(const Graph& g, const NoiseDistribution& nd,
                                  std::size_t m, Rng& rng) {
  (void)g;
  std::vector<int> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = nd.sample(rng);
  return out;
}

namespace {

// Emits each pair of a linearized region with probability p via geometric
// skipping; visit(t) maps the linear index back to a node pair.
template <typename Visit>
void bernoulli_region(std::uint64_t size, double p, Rng& rng, Visit visit) {
  if (size == 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::uint64_t t = 0; t < size; ++t) visit(t);
    return;
  }
  const double log1mp = std::log1p(-p);
  double t = -1.0;
  while (true) {
    t += 1.0 + std::floor(std::log(rng.uniform()) / log1mp);
    if (t >= static_cast<double>(size)) break;
    visit(static_cast<std::uint64_t>(t));
  }
}

std::vector<int> block_sizes(int n, int k) {
  std::vector<int> sizes(k, n / k);
  for (int i = 0; i < n % k; ++i) ++sizes[i];
  return sizes;
}

// Direct construction for generated graphs: nodes 0..n-1 always exist
// (numeric labels), even when isolated. Generators never emit self-loops
// or duplicates, so edges are taken as-is.
Graph graph_from_index_edges(int n, std::vector<std::pair<int, int>> edges) {
  Graph g;
  g.node_count = n;
  g.labels.reserve(n);
  for (int v = 0; v < n; ++v) {
    g.labels.push_back(std::to_string(v));
    g.label_index.emplace(g.labels.back(), v);
  }
  g.edges = std::move(edges);
  g.adjacency.resize(n);
  for (auto [u, v] : g.edges) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  return g;
}

}  // namespace

std::pair<Graph, CommunitySet> generate_sbm(int n, int k, double p_in,
                                            double p_out,
                                            std::uint64_t seed) {
  if (k > n) throw std::invalid_argument("generate_sbm: k > n");
  if (k < 1) throw std::invalid_argument("generate_sbm: k < 1");
  if (p_out > p_in || p_in > 1.0 || p_out < 0.0)
    throw std::invalid_argument("generate_sbm: need 0 <= p_out <= p_in <= 1");

  const auto sizes = block_sizes(n, k);
  std::vector<int> start(k, 0);
  for (int b = 1; b < k; ++b) start[b] = start[b - 1] + sizes[b - 1];

  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < k; ++a) {
    // within-block pairs (i < j), linearized in row order
    const std::uint64_t sa = sizes[a];
    bernoulli_region(sa * (sa - 1) / 2, p_in, rng, [&](std::uint64_t t) {
      // invert t = i*(sa-1) - i*(i+1)/2 + (j - i - 1)
      std::uint64_t i = 0, row = sa - 1;
      while (t >= row) {
        t -= row;
        --row;
        ++i;
      }
      const std::uint64_t j = i + 1 + t;
      edges.emplace_back(start[a] + static_cast<int>(i),
                         start[a] + static_cast<int>(j));
    });
    for (int b = a + 1; b < k; ++b) {
      const std::uint64_t sb = sizes[b];
      bernoulli_region(sa * sb, p_out, rng, [&](std::uint64_t t) {
        edges.emplace_back(start[a] + static_cast<int>(t / sb),
                           start[b] + static_cast<int>(t % sb));
      });
    }
  }

  Graph g = graph_from_index_edges(n, std::move(edges));
  std::vector<std::vector<int>> members(k);
  for (int b = 0; b < k; ++b)
    for (int i = 0; i < sizes[b]; ++i) members[b].push_back(start[b] + i);
  return {std::move(g), CommunitySet::from_members(k, n, std::move(members))};
}

NestedSbm generate_nested_sbm(int n, int supers, int subs_per_super,
                              double p_sub, double p_super, double p_out,
                              std::uint64_t seed) {
  const int fine_k = supers * subs_per_super;
  if (fine_k > n) throw std::invalid_argument("generate_nested_sbm: too many blocks");
  if (!(p_out <= p_super && p_super <= p_sub && p_sub <= 1.0 && p_out >= 0.0))
    throw std::invalid_argument(
        "generate_nested_sbm: need 0 <= p_out <= p_super <= p_sub <= 1");

  const auto sizes = block_sizes(n, fine_k);
  std::vector<int> start(fine_k, 0);
  for (int b = 1; b < fine_k; ++b) start[b] = start[b - 1] + sizes[b - 1];

  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < fine_k; ++a) {
    const std::uint64_t sa = sizes[a];
    bernoulli_region(sa * (sa - 1) / 2, p_sub, rng, [&](std::uint64_t t) {
      std::uint64_t i = 0, row = sa - 1;
      while (t >= row) {
        t -= row;
        --row;
        ++i;
      }
      const std::uint64_t j = i + 1 + t;
      edges.emplace_back(start[a] + static_cast<int>(i),
                         start[a] + static_cast<int>(j));
    });
    for (int b = a + 1; b < fine_k; ++b) {
      const double p =
          (a / subs_per_super == b / subs_per_super) ? p_super : p_out;
      const std::uint64_t sb = sizes[b];
      bernoulli_region(sa * sb, p, rng, [&](std::uint64_t t) {
        edges.emplace_back(start[a] + static_cast<int>(t / sb),
                           start[b] + static_cast<int>(t % sb));
      });
    }
  }

  NestedSbm out;
  out.graph = graph_from_index_edges(n, std::move(edges));
  std::vector<std::vector<int>> fine(fine_k);
  for (int b = 0; b < fine_k; ++b)
    for (int i = 0; i < sizes[b]; ++i) fine[b].push_back(start[b] + i);
  out.fine = CommunitySet::from_members(fine_k, n, std::move(fine));
  std::vector<std::vector<int>> coarse(supers);
  for (int b = 0; b < fine_k; ++b)
    for (int i = 0; i < sizes[b]; ++i)
      coarse[b / subs_per_super].push_back(start[b] + i);
  out.coarse = CommunitySet::from_members(supers, n, std::move(coarse));
  return out;
}

}  // namespace vgraph
