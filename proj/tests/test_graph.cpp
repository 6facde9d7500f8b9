#include <cmath>
#include <sstream>

#include "doctest.h"
#include "testutil.hpp"
#include "vgraph/graph.hpp"

using namespace vgraph;
using vgtest::graph_from_pairs;

TEST_CASE("edge list parsing") {
  std::istringstream in("0 1\n1 2\n");
  Graph g = load_edge_list(in);
  CHECK(g.node_count == 3);
  CHECK(g.edges.size() == 2);
  CHECK(g.adjacent(0, 1));
  CHECK(g.adjacent(1, 2));
  CHECK(!g.adjacent(0, 2));
  g.check_invariants();
}

TEST_CASE("self-loops dropped with count") {
  std::istringstream in("0 0\n0 1\n");
  Graph g = load_edge_list(in);
  CHECK(g.node_count == 2);
  CHECK(g.edges.size() == 1);
  CHECK(g.self_loops_dropped == 1);
}

TEST_CASE("duplicate edges deduplicated, both orientations") {
  std::istringstream in("a b\nb a\na b\n");
  Graph g = load_edge_list(in);
  CHECK(g.edges.size() == 1);
  CHECK(g.duplicate_edges_dropped == 2);
}

TEST_CASE("comments and blank lines allowed") {
  std::istringstream in("# header\n\n0 1\n  \n# tail\n1 2\n");
  Graph g = load_edge_list(in);
  CHECK(g.edges.size() == 2);
}

TEST_CASE("malformed line reports its number") {
  std::istringstream in("0 1\n0 1 2\n");
  CHECK_THROWS_AS(load_edge_list(in), ParseError);
  std::istringstream in2("0 1\n\n0\n");
  try {
    load_edge_list(in2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("labels keep first-seen order and arbitrary strings") {
  std::istringstream in("n42 alpha\nalpha n7\n");
  Graph g = load_edge_list(in);
  CHECK(g.labels == std::vector<std::string>{"n42", "alpha", "n7"});
  CHECK(g.label_index.at("n7") == 2);
}

TEST_CASE("edge list round trip") {
  Graph g = graph_from_pairs({{0, 1}, {1, 2}, {2, 3}, {0, 3}, {1, 3}});
  std::ostringstream out;
  write_edge_list(out, g);
  std::istringstream in(out.str());
  Graph g2 = load_edge_list(in);
  CHECK(g2.node_count == g.node_count);
  CHECK(g2.edges == g.edges);
  CHECK(g2.labels == g.labels);
}

TEST_CASE("jaccard coefficient") {
  SUBCASE("triangle: alpha = 1/3") {
    Graph g = vgtest::triangle_graph();
    CHECK(jaccard_coefficient(g, 0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("path: endpoints share nothing") {
    Graph g = graph_from_pairs({{0, 1}, {1, 2}});
    CHECK(jaccard_coefficient(g, 0, 1) == 0.0);
  }
  SUBCASE("identical neighbor sets give 1") {
    // 0 and 1 both connect to {2, 3} and not to each other
    Graph g = graph_from_pairs({{0, 2}, {0, 3}, {1, 2}, {1, 3}});
    CHECK(jaccard_coefficient(g, 0, 1) == 1.0);
  }
  SUBCASE("empty union gives 0") {
    std::istringstream in("0 1\n");
    Graph g = load_edge_list(in);
    // no isolated nodes from an edge list; use two leaves of a star
    Graph star = graph_from_pairs({{0, 1}, {0, 2}});
    CHECK(jaccard_coefficient(star, 1, 2) == 1.0);  // both see only the hub
  }
  SUBCASE("symmetry") {
    auto [g, cs] = generate_sbm(40, 3, 0.3, 0.05, 7);
    for (int w = 0; w < g.node_count; w += 3)
      for (int c = 0; c < g.node_count; c += 5)
        CHECK(jaccard_coefficient(g, w, c) == jaccard_coefficient(g, c, w));
  }
  SUBCASE("index out of range") {
    Graph g = vgtest::triangle_graph();
    CHECK_THROWS_AS(jaccard_coefficient(g, 0, 7), std::out_of_range);
  }
}

TEST_CASE("noise distribution follows deg^0.75") {
  // degrees: 4, 2, 2, 1, 1
  Graph g = graph_from_pairs({{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}});
  NoiseDistribution nd(g);

  std::vector<double> want(5);
  double total = 0.0;
  for (int v = 0; v < 5; ++v) {
    want[v] = std::pow(static_cast<double>(g.degree(v)), 0.75);
    total += want[v];
  }
  for (double& wv : want) wv /= total;
  for (int v = 0; v < 5; ++v)
    CHECK(nd.probability(v) == doctest::Approx(want[v]).epsilon(1e-12));

  const int n = 100000;
  Rng rng(123);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < n; ++i) ++counts[nd.sample(rng)];
  for (int v = 0; v < 5; ++v) {
    const double freq = static_cast<double>(counts[v]) / n;
    const double sigma = std::sqrt(want[v] * (1.0 - want[v]) / n);
    CHECK(std::abs(freq - want[v]) <= 3.0 * sigma);
  }
}

TEST_CASE("sample_negatives contracts") {
  Graph g = graph_from_pairs({{0, 1}, {1, 2}});
  NoiseDistribution nd(g);
  SUBCASE("m = 0 gives empty list") {
    Rng rng(1);
    CHECK(sample_negatives(g, nd, 0, rng).empty());
  }
  SUBCASE("deterministic given seed") {
    Rng a(99), b(99);
    CHECK(sample_negatives(g, nd, 50, a) == sample_negatives(g, nd, 50, b));
  }
  SUBCASE("indices always in range") {
    Rng rng(5);
    for (int v : sample_negatives(g, nd, 1000, rng)) {
      CHECK(v >= 0);
      CHECK(v < g.node_count);
    }
  }
  SUBCASE("zero-edge graph rejected") {
    Graph empty;
    empty.node_count = 3;
    empty.adjacency.resize(3);
    CHECK_THROWS_AS(NoiseDistribution{empty}, std::invalid_argument);
  }
}

TEST_CASE("sbm generator") {
  SUBCASE("degenerate probabilities give two cliques") {
    auto [g, cs] = generate_sbm(6, 2, 1.0, 0.0, 3);
    CHECK(g.edges.size() == 6);  // two K3s
    for (auto [u, v] : g.edges) CHECK((u < 3) == (v < 3));
    CHECK(cs.members[0] == std::vector<int>{0, 1, 2});
    CHECK(cs.members[1] == std::vector<int>{3, 4, 5});
    g.check_invariants();
  }
  SUBCASE("same seed, same edges") {
    auto [g1, c1] = generate_sbm(50, 3, 0.2, 0.01, 11);
    auto [g2, c2] = generate_sbm(50, 3, 0.2, 0.01, 11);
    CHECK(g1.edges == g2.edges);
  }
  SUBCASE("edge count within 3 sigma of the binomial mean") {
    auto [g, cs] = generate_sbm(300, 3, 0.1, 0.005, 17);
    // 3 * C(100,2) * 0.1 + 3 * 100 * 100 * 0.005
    const double mean = 3 * 4950 * 0.1 + 3 * 10000 * 0.005;
    const double var = 3 * 4950 * 0.1 * 0.9 + 3 * 10000 * 0.005 * 0.995;
    CHECK(std::abs(static_cast<double>(g.edges.size()) - mean) <=
          3.0 * std::sqrt(var));
    g.check_invariants();
  }
  SUBCASE("k > n rejected") {
    CHECK_THROWS_AS(generate_sbm(3, 5, 0.5, 0.1, 1), std::invalid_argument);
  }
}

TEST_CASE("nested sbm plants two levels") {
  NestedSbm nested = generate_nested_sbm(120, 3, 2, 0.5, 0.2, 0.01, 9);
  nested.graph.check_invariants();
  CHECK(nested.fine.k == 6);
  CHECK(nested.coarse.k == 3);
  CHECK(nested.fine.is_partition());
  CHECK(nested.coarse.is_partition());
  // fine block 0 and 1 nest under coarse block 0
  for (int v : nested.fine.members[0]) CHECK(nested.coarse.membership[v][0] == 0);
  for (int v : nested.fine.members[1]) CHECK(nested.coarse.membership[v][0] == 0);
  for (int v : nested.fine.members[2]) CHECK(nested.coarse.membership[v][0] == 1);
}

TEST_CASE("community set loading") {
  Graph g = graph_from_pairs({{0, 1}, {1, 2}, {2, 3}});
  SUBCASE("snap cmty format") {
    std::istringstream in("0 1\n2 3\n");
    CommunitySet cs = load_communities(in, g);
    CHECK(cs.k == 2);
    CHECK(cs.members[0] == std::vector<int>{0, 1});
    CHECK(cs.is_partition());
    cs.check_invariants();
  }
  SUBCASE("unknown labels dropped and counted") {
    std::istringstream in("0 1 99\n2 3\n");
    std::size_t dropped = 0;
    CommunitySet cs = load_communities(in, g, false, &dropped);
    CHECK(dropped == 1);
    CHECK(cs.members[0].size() == 2);
  }
  SUBCASE("circle files carry a leading name token") {
    std::istringstream in("circle0 0 1\ncircle1 2\n");
    CommunitySet cs = load_communities(in, g, /*skip_first_token=*/true);
    CHECK(cs.k == 2);
    CHECK(cs.members[0] == std::vector<int>{0, 1});
    CHECK(cs.members[1] == std::vector<int>{2});
  }
  SUBCASE("round trip through the writer") {
    std::istringstream in("0 1\n2 3\n");
    CommunitySet cs = load_communities(in, g);
    std::ostringstream out;
    write_communities(out, cs, g);
    std::istringstream in2(out.str());
    CommunitySet cs2 = load_communities(in2, g);
    CHECK(cs2.members == cs.members);
  }
  SUBCASE("overlap bookkeeping") {
    std::istringstream in("0 1 2\n2 3\n");
    CommunitySet cs = load_communities(in, g);
    CHECK(cs.overlapping());
    CHECK(!cs.is_partition());
    CHECK(cs.membership[2] == std::vector<int>{0, 1});
    CHECK(cs.assigned_count() == 4);
  }
}
