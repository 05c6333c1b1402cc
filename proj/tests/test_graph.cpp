#include <doctest.h>

#include <cmath>

#include "magcnn/graph.hpp"
#include "magcnn/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace magcnn;

namespace {

Graph path3() { return Graph(3, {{0, 1, 1}, {1, 2, 1}}); }

}  // namespace

TEST_CASE("bfs on a path graph") {
  auto d = shortest_path_lengths(path3(), 0);
  CHECK(d == std::vector<int>{0, 1, 2});
}

TEST_CASE("bfs flags unreachable nodes") {
  Graph g(2, {});
  auto d = shortest_path_lengths(g, 0);
  CHECK(d[0] == 0);
  CHECK(d[1] == kUnreachable);
}

TEST_CASE("bfs rejects invalid source") {
  CHECK_THROWS_AS(shortest_path_lengths(path3(), 3), ArgumentError);
  CHECK_THROWS_AS(shortest_path_lengths(path3(), -1), ArgumentError);
  CHECK_THROWS_AS(closeness_centrality(path3(), 7), ArgumentError);
  CHECK_THROWS_AS(weighted_degree(path3(), -2), ArgumentError);
}

TEST_CASE("graph construction rejects malformed edges") {
  CHECK_THROWS_AS(Graph(3, {{0, 0, 1}}), ArgumentError);
  CHECK_THROWS_AS(Graph(3, {{0, 3, 1}}), ArgumentError);
  CHECK_THROWS_AS(Graph(3, {{0, 1, 0}}), ArgumentError);
  CHECK_THROWS_AS(Graph(3, {{0, 1, 1}, {1, 0, 1}}), ArgumentError);
}

TEST_CASE("bfs matches floyd-warshall on random graphs") {
  Rng rng(12345);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.below(49));
    Graph g = testutil::random_graph(rng, n, rng.uniform(0.02, 0.4));
    auto fw = oracle::floyd_warshall(g);
    for (NodeId v = 0; v < n; ++v) {
      auto d = shortest_path_lengths(g, v);
      for (NodeId u = 0; u < n; ++u) {
        int expected = fw[v][u] >= oracle::kInf ? kUnreachable : fw[v][u];
        CHECK(d[u] == expected);
      }
    }
  }
}

TEST_CASE("distance symmetry and triangle inequality") {
  Rng rng(777);
  for (int trial = 0; trial < 25; ++trial) {
    int n = 3 + static_cast<int>(rng.below(48));
    Graph g = testutil::random_graph(rng, n, rng.uniform(0.05, 0.3));
    std::vector<std::vector<int>> d;
    for (NodeId v = 0; v < n; ++v) d.push_back(shortest_path_lengths(g, v));
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        CHECK(d[u][v] == d[v][u]);
        for (int w = 0; w < n; ++w) {
          if (d[u][v] >= 0 && d[v][w] >= 0) {
            REQUIRE(d[u][w] != kUnreachable);
            CHECK(d[u][w] <= d[u][v] + d[v][w]);
          }
        }
      }
    }
  }
}

TEST_CASE("closeness of small fixed graphs") {
  Graph path = path3();
  CHECK(closeness_centrality(path, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(closeness_centrality(path, 0) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  Graph star(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}});
  CHECK(closeness_centrality(star, 0) == doctest::Approx(1.0));
  CHECK(closeness_centrality(star, 1) == doctest::Approx(0.6));
}

TEST_CASE("closeness on disconnected and trivial graphs") {
  Graph pair(2, {});
  CHECK(closeness_centrality(pair, 0) == 0.0);
  Graph single(1, {});
  CHECK(closeness_centrality(single, 0) == 0.0);

  // one isolated node next to a connected triangle: sum over reachable only
  Graph mixed(4, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}});
  CHECK(closeness_centrality(mixed, 0) == doctest::Approx(3.0 / 2.0));
  CHECK(closeness_centrality(mixed, 3) == 0.0);
}

TEST_CASE("closeness matches the distance-matrix oracle") {
  Rng rng(424242);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.below(29));
    Graph g = testutil::random_connected_graph(rng, n, rng.uniform(0.0, 0.3));
    auto fw = oracle::floyd_warshall(g);
    for (NodeId v = 0; v < n; ++v) {
      double expected = oracle::closeness_from_matrix(fw, v);
      CHECK(std::abs(closeness_centrality(g, v) - expected) <= 1e-12);
    }
  }
}

TEST_CASE("closeness bounds on connected graphs") {
  Rng rng(5150);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 2 + static_cast<int>(rng.below(29));
    Graph g = testutil::random_connected_graph(rng, n, rng.uniform(0.0, 0.4));
    for (NodeId v = 0; v < n; ++v) {
      double c = closeness_centrality(g, v);
      CHECK(c >= 1.0 / (n - 1) - 1e-12);
      CHECK(c <= 1.0 + 1e-12);
      bool adjacent_to_all =
          static_cast<int>(g.neighbors(v).size()) == n - 1;
      CHECK((c == doctest::Approx(1.0)) == adjacent_to_all);
    }
  }
}

TEST_CASE("weighted degree counts multiplicity") {
  Graph triangle(3, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}});
  for (NodeId v = 0; v < 3; ++v) CHECK(weighted_degree(triangle, v) == 2);

  Graph bond(2, {{0, 1, 3}});
  CHECK(weighted_degree(bond, 0) == 3);
  CHECK(weighted_degree(bond, 1) == 3);
}

TEST_CASE("multiplicity never shortens hop distances") {
  Graph heavy(3, {{0, 1, 3}, {1, 2, 2}});
  auto d = shortest_path_lengths(heavy, 0);
  CHECK(d == std::vector<int>{0, 1, 2});
}

TEST_CASE("adjacency is symmetric and sorted") {
  Rng rng(99);
  Graph g = testutil::random_graph(rng, 20, 0.2);
  for (NodeId u = 0; u < 20; ++u) {
    auto nbrs = g.neighbors(u);
    CHECK(std::is_sorted(nbrs.begin(), nbrs.end()));
    for (NodeId v : nbrs) {
      auto back = g.neighbors(v);
      CHECK(std::binary_search(back.begin(), back.end(), u));
    }
  }
}
