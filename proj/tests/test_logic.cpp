#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gtlogic/logic.hpp"

using namespace gtlogic;

namespace {

// independent oracle: direct recursion on the AST, no sharing, no memo
bool naive_eval(const LabeledGraph& g, const Formula& f, int v) {
  switch (f.kind) {
    case NodeKind::Top: return true;
    case NodeKind::Prop: return g.has_label(v, f.prop);
    case NodeKind::Not: return !naive_eval(g, *f.left, v);
    case NodeKind::And: return naive_eval(g, *f.left, v) && naive_eval(g, *f.right, v);
    case NodeKind::Dia: {
      long long cnt = 0;
      for (int u : g.out_neighbors(v)) cnt += naive_eval(g, *f.left, u);
      return cnt >= f.grade;
    }
    case NodeKind::Glob: {
      long long cnt = 0;
      for (int u = 0; u < g.n; ++u) cnt += naive_eval(g, *f.left, u);
      return cnt >= f.grade;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("parser: sugar desugars per the semantics") {
  // glob=0 (dia<1 top): "no vertex is a dead-end"
  FormulaPtr f = parse_formula("glob=0 (dia<1 top)");
  // glob=0 x desugars to glob>=0 x & !glob>=1 x = top & !glob>=1 x
  REQUIRE(f->kind == NodeKind::And);
  CHECK(f->left->kind == NodeKind::Top);
  CHECK(f->right->kind == NodeKind::Not);
  CHECK(f->right->left->kind == NodeKind::Glob);
  CHECK(f->right->left->grade == 1);

  CHECK(parse_formula("top")->kind == NodeKind::Top);
  FormulaPtr g = parse_formula("!(p0 & p1)");
  REQUIRE(g->kind == NodeKind::Not);
  REQUIRE(g->left->kind == NodeKind::And);
  CHECK(g->left->left->prop == 0);
  CHECK(g->left->right->prop == 1);

  CHECK(parse_formula("dia p0")->grade == 1);
  CHECK(parse_formula("dia>=3 p0")->grade == 3);
  CHECK(parse_formula("dia>=0 p0")->kind == NodeKind::Top);
  CHECK(parse_formula("glob>=0 p0")->kind == NodeKind::Top);
  CHECK(parse_formula("  ( p0 |p1 ) ")->kind == NodeKind::Not);
  CHECK(parse_formula("(p0 -> p1)")->kind == NodeKind::Not);

  CHECK_THROWS(parse_formula("p0 & p1"));   // parentheses required
  CHECK_THROWS(parse_formula("(p0 & p1"));  // missing close
  CHECK_THROWS(parse_formula("qux"));
  CHECK_THROWS(parse_formula("dia>= p0"));
  CHECK_THROWS(parse_formula(""));
}

TEST_CASE("fragment classifier returns the minimal fragment") {
  CHECK(fragment_of(*parse_formula("(p0 & !p1)")) == FragmentTag::PL);
  CHECK(fragment_of(*parse_formula("glob>=3 p0")) == FragmentTag::PL_GC);
  CHECK(fragment_of(*parse_formula("dia>=2 glob p0")) == FragmentTag::GML_G);
  CHECK(fragment_of(*parse_formula("dia p0")) == FragmentTag::ML);
  CHECK(fragment_of(*parse_formula("glob p0")) == FragmentTag::PL_G);
  CHECK(fragment_of(*parse_formula("dia>=2 p0")) == FragmentTag::GML);
  CHECK(fragment_of(*parse_formula("(dia p0 & glob>=2 p1)")) == FragmentTag::ML_GC);
  CHECK(fragment_within(FragmentTag::PL, FragmentTag::GML_GC));
  CHECK(fragment_within(FragmentTag::PL_G, FragmentTag::GML_G));
  CHECK(!fragment_within(FragmentTag::PL_GC, FragmentTag::GML_G));
  CHECK(!fragment_within(FragmentTag::ML, FragmentTag::PL_GC));
}

TEST_CASE("eval anchors") {
  {
    LabeledGraph g(1, 1);
    g.set_label(0, 0);
    g.rebuild_adjacency();
    CHECK(eval_formula(g, *parse_formula("p0")) == std::vector<uint8_t>{1});
  }
  {
    // 2 vertices, no edges: every vertex is a dead-end
    LabeledGraph g(2, 1);
    g.rebuild_adjacency();
    auto bits = eval_formula(g, *parse_formula("glob=0 (dia<1 top)"));
    CHECK(bits == std::vector<uint8_t>({0, 0}));
    // and with one edge 0->1 the head is no dead end, but 1 still is
    g.add_edge(0, 1);
    g.rebuild_adjacency();
    auto bits2 = eval_formula(g, *parse_formula("glob=0 (dia<1 top)"));
    CHECK(bits2 == std::vector<uint8_t>({0, 0}));
  }
  {
    LabeledGraph g(2, 1);
    g.add_edge(0, 0);
    g.add_edge(1, 0);
    g.rebuild_adjacency();
    auto bits = eval_formula(g, *parse_formula("glob=0 (dia<1 top)"));
    CHECK(bits == std::vector<uint8_t>({1, 1}));
  }
  CHECK_THROWS(eval_formula(LabeledGraph(1, 0), *parse_formula("p0")));
}

TEST_CASE("eval agrees with the naive recursive oracle on random graphs") {
  std::vector<std::string> corpus = {
      "p0", "top", "!(p0 & p1)", "(p0 | p1)", "dia p0", "dia>=2 (p0 | p1)",
      "glob p1", "glob>=2 p0", "glob=1 p0", "dia<2 dia p1",
      "(glob>=3 p0 & dia p1)", "glob (dia>=2 top)", "dia dia dia p0",
      "(p0 -> dia p0)", "glob=0 (dia<1 top)",
  };
  std::mt19937_64 rng(99);
  for (int it = 0; it < 120; ++it) {
    int n = 1 + (int)(rng() % 5);
    LabeledGraph g = random_graph(rng, n, 2);
    for (const auto& text : corpus) {
      FormulaPtr f = parse_formula(text);
      auto bits = eval_formula(g, *f);
      for (int v = 0; v < n; ++v) {
        INFO(text << " at vertex " << v);
        CHECK((bool)bits[v] == naive_eval(g, *f, v));
      }
    }
  }
}

TEST_CASE("grade monotonicity on sampled graphs") {
  std::mt19937_64 rng(5);
  for (int it = 0; it < 60; ++it) {
    int n = 1 + (int)(rng() % 5);
    LabeledGraph g = random_graph(rng, n, 2);
    for (long long k = 1; k <= 4; ++k) {
      for (bool global : {false, true}) {
        FormulaPtr child = parse_formula("(p0 | dia p1)");
        FormulaPtr strong = global ? Formula::glob(k + 1, child) : Formula::dia(k + 1, child);
        FormulaPtr weak = global ? Formula::glob(k, child) : Formula::dia(k, child);
        auto bs = eval_formula(g, *strong);
        auto bw = eval_formula(g, *weak);
        for (int v = 0; v < n; ++v) CHECK((!bs[v] || bw[v]));
      }
    }
  }
}

TEST_CASE("eval commutes with vertex permutation") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 40; ++it) {
    int n = 2 + (int)(rng() % 4);
    LabeledGraph g = random_graph(rng, n, 2);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    LabeledGraph h(n, 2);
    for (auto& [u, v] : g.edges) h.add_edge(perm[u], perm[v]);
    for (int v = 0; v < n; ++v)
      for (int p = 0; p < 2; ++p)
        if (g.labels[v][p]) h.set_label(perm[v], p);
    h.rebuild_adjacency();
    for (const char* text : {"dia>=2 p0", "(glob p1 & !p0)", "glob>=2 (p0 & p1)"}) {
      auto bg = eval_formula(g, *parse_formula(text));
      auto bh = eval_formula(h, *parse_formula(text));
      for (int v = 0; v < n; ++v) CHECK(bg[v] == bh[perm[v]]);
    }
  }
}

TEST_CASE("subformula enumeration orders children first and deduplicates") {
  FormulaPtr f = parse_formula("(dia p0 & !dia p0)");
  SubformulaIndex subs = enumerate_subformulas(*f);
  // p0, dia p0, !dia p0, conjunction: 4 distinct nodes
  CHECK(subs.order.size() == 4);
  for (size_t i = 0; i < subs.order.size(); ++i) {
    const Formula* s = subs.order[i];
    if (s->left) CHECK(subs.of(*s->left) < (int)i);
    if (s->right) CHECK(subs.of(*s->right) < (int)i);
  }
  CHECK(subs.of(*f) == (int)subs.order.size() - 1);
}
