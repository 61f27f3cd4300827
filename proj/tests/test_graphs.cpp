#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gtlogic/graphs.hpp"

using namespace gtlogic;

TEST_CASE("word graphs") {
  LabeledGraph g1 = word_graph({0}, 1);
  CHECK(g1.n == 1);
  CHECK(g1.edges.empty());
  CHECK(g1.has_label(0, 0));

  LabeledGraph g2 = word_graph({0, 1}, 2);
  CHECK(g2.n == 2);
  REQUIRE(g2.edges.size() == 1);
  CHECK(g2.edges[0] == std::make_pair(0, 1));
  CHECK(g2.has_label(0, 0));
  CHECK(g2.has_label(1, 1));
  CHECK(!g2.has_label(1, 0));

  for (int len : {2, 3, 5, 7}) {
    std::vector<int> w(len, 0);
    CHECK(word_graph(w, 1).edges.size() == (size_t)(len - 1));
  }
  CHECK(word_graph_from_text("p0 p1 p0", 2).n == 3);
  CHECK_THROWS(word_graph({}, 1));
}

TEST_CASE("disjoint copies") {
  LabeledGraph g(3, 2);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 2);
  g.set_label(0, 0);
  g.set_label(2, 1);
  g.rebuild_adjacency();

  LabeledGraph one = disjoint_copies(g, 1);
  CHECK(one.n == g.n);
  CHECK(one.edges.size() == g.edges.size());

  LabeledGraph three = disjoint_copies(g, 3);
  CHECK(three.n == 9);
  CHECK(three.edges.size() == 9);
  for (int i = 0; i < 3; ++i) {
    CHECK(three.has_edge(0 + 3 * i, 1 + 3 * i));
    CHECK(three.has_label(0 + 3 * i, 0));
    CHECK(three.has_label(2 + 3 * i, 1));
    CHECK(!three.has_edge(0 + 3 * i, (1 + 3 * (i + 1)) % 9));
  }
  CHECK_THROWS(disjoint_copies(g, 0));
}

TEST_CASE("rolled copies keep labels and scale edges") {
  LabeledGraph g(2, 1);
  g.add_edge(0, 1);
  g.add_edge(1, 0);
  g.set_label(0, 0);
  g.rebuild_adjacency();
  LabeledGraph r = rolled_copies(g, 3);
  CHECK(r.n == 6);
  CHECK(r.edges.size() == 6);
  // edges cross to the next copy
  CHECK(r.has_edge(0, 3));
  CHECK(r.has_edge(2, 5));
  CHECK(r.has_edge(4, 1));
  CHECK(r.has_label(0, 0));
  CHECK(r.has_label(2, 0));
}

TEST_CASE("serialization round-trips") {
  std::mt19937_64 rng(123);
  for (int it = 0; it < 50; ++it) {
    LabeledGraph g = random_graph(rng, 1 + (int)(rng() % 6), 2);
    LabeledGraph h = LabeledGraph::from_json(g.to_json(), g.label_count);
    CHECK(h.n == g.n);
    CHECK(h.label_count == g.label_count);
    std::set<std::pair<int, int>> eg(g.edges.begin(), g.edges.end());
    std::set<std::pair<int, int>> eh(h.edges.begin(), h.edges.end());
    CHECK(eg == eh);
    CHECK(h.labels == g.labels);
  }
}

TEST_CASE("exhaustive enumeration counts") {
  ExhaustiveGraphs e1(1, 1);
  CHECK(e1.size() == 4);  // loop/no-loop x labeled/unlabeled
  ExhaustiveGraphs e2(2, 1);
  CHECK(e2.size() == 64);  // 2^4 edge patterns x 2^2 labelings
  ExhaustiveGraphs e3(3, 2);
  CHECK(e3.size() == (1ull << 15));
  // spot-check distinctness of a few decoded graphs
  std::set<std::string> seen;
  for (unsigned long long i = 0; i < e2.size(); ++i)
    seen.insert(e2.get(i).to_json().dump());
  CHECK(seen.size() == 64);
  CHECK_THROWS(ExhaustiveGraphs(4, 1));
  CHECK_THROWS(ExhaustiveGraphs(2, 3));
}

TEST_CASE("random generation replays per seed") {
  std::mt19937_64 a(7), b(7), c(8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    LabeledGraph ga = random_graph(a, 4, 2);
    LabeledGraph gb = random_graph(b, 4, 2);
    LabeledGraph gc = random_graph(c, 4, 2);
    if (ga.to_json() != gb.to_json()) all_equal = false;
    if (ga.to_json() != gc.to_json()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("graph validation") {
  LabeledGraph g(2, 1);
  CHECK_THROWS(g.add_edge(0, 2));
  CHECK_THROWS(g.add_edge(-1, 0));
  CHECK_THROWS(g.set_label(0, 1));
  CHECK_THROWS(LabeledGraph(0, 1));
}
