#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gtlogic {

// Finite directed graph with self-loops allowed and a label-set vertex
// labeling. Vertices are 0-based here and in files; the write-ups use 1-based
// [n]. Labels are p0 < p1 < ... by numeric suffix; label_count fixes the
// alphabet width (columns of the 0/1 label matrix).
struct LabeledGraph {
  int n = 1;
  int label_count = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<uint8_t>> labels;  // labels[v][i] = 1 iff p_i in lambda(v)

  std::vector<std::vector<int>> adj;   // out-neighbors
  std::vector<std::vector<int>> radj;  // in-neighbors (predecessors)

  LabeledGraph() = default;
  LabeledGraph(int n_, int labels_) : n(n_), label_count(labels_) {
    if (n < 1) throw std::invalid_argument("LabeledGraph: n >= 1 required");
    labels.assign(n, std::vector<uint8_t>(label_count, 0));
    rebuild_adjacency();
  }

  void add_edge(int u, int v) {
    check_vertex(u);
    check_vertex(v);
    edges.emplace_back(u, v);
  }

  void set_label(int v, int p, bool on = true) {
    check_vertex(v);
    if (p < 0 || p >= label_count) throw std::invalid_argument("LabeledGraph: bad label id");
    labels[v][p] = on ? 1 : 0;
  }

  bool has_label(size_t v, int p) const { return p < label_count && labels[v][p]; }

  void rebuild_adjacency() {
    adj.assign(n, {});
    radj.assign(n, {});
    std::set<std::pair<int, int>> seen;
    for (auto& [u, v] : edges) {
      check_vertex(u);
      check_vertex(v);
      if (!seen.insert({u, v}).second) continue;
      adj[u].push_back(v);
      radj[v].push_back(u);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    for (auto& a : radj) std::sort(a.begin(), a.end());
  }

  const std::vector<int>& out_neighbors(int v) const { return adj[v]; }
  const std::vector<int>& predecessors(int v) const { return radj[v]; }

  bool has_edge(int u, int v) const {
    return std::binary_search(adj[u].begin(), adj[u].end(), v);
  }

  void check_vertex(int v) const {
    if (v < 0 || v >= n) throw std::invalid_argument("LabeledGraph: vertex out of range");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["n"] = n;
    auto earr = nlohmann::json::array();
    for (auto& [u, v] : edges) earr.push_back({u, v});
    j["edges"] = earr;
    auto lab = nlohmann::json::object();
    for (int p = 0; p < label_count; ++p) {
      auto arr = nlohmann::json::array();
      for (int v = 0; v < n; ++v)
        if (labels[v][p]) arr.push_back(v);
      lab["p" + std::to_string(p)] = arr;
    }
    j["labels"] = lab;
    return j;
  }

  static LabeledGraph from_json(const nlohmann::json& j, int min_labels = 0) {
    int n = j.at("n").get<int>();
    int width = min_labels;
    for (auto& [key, val] : j.at("labels").items()) {
      if (key.empty() || key[0] != 'p')
        throw std::invalid_argument("graph labels must be named pN");
      width = std::max(width, std::stoi(key.substr(1)) + 1);
    }
    LabeledGraph g(n, width);
    for (auto& e : j.at("edges")) g.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
    for (auto& [key, val] : j.at("labels").items()) {
      int p = std::stoi(key.substr(1));
      for (auto& v : val) g.set_label(v.get<int>(), p);
    }
    g.rebuild_adjacency();
    return g;
  }
};

struct PointedGraph {
  LabeledGraph graph;
  int vertex = 0;
};

// Word-shaped graph: vertices are positions, edges the successor relation,
// each position labeled with its letter only.
inline LabeledGraph word_graph(const std::vector<int>& word, int label_count) {
  if (word.empty()) throw std::invalid_argument("word_graph: empty word");
  int width = label_count;
  for (int w : word) width = std::max(width, w + 1);
  LabeledGraph g((int)word.size(), width);
  for (size_t i = 0; i + 1 < word.size(); ++i) g.add_edge((int)i, (int)(i + 1));
  for (size_t i = 0; i < word.size(); ++i) g.set_label((int)i, word[i]);
  g.rebuild_adjacency();
  return g;
}

inline LabeledGraph word_graph_from_text(const std::string& text, int label_count = 0) {
  std::istringstream in(text);
  std::string tok;
  std::vector<int> word;
  while (in >> tok) {
    if (tok[0] == 'p') tok = tok.substr(1);
    word.push_back(std::stoi(tok));
  }
  return word_graph(word, label_count);
}

// q-fold disjoint union of g with itself; vertex (v, i) is v + i*n.
inline LabeledGraph disjoint_copies(const LabeledGraph& g, int q) {
  if (q < 1) throw std::invalid_argument("disjoint_copies: q >= 1 required");
  LabeledGraph out(g.n * q, g.label_count);
  for (int i = 0; i < q; ++i) {
    for (auto& [u, v] : g.edges) out.add_edge(u + i * g.n, v + i * g.n);
    for (int v = 0; v < g.n; ++v)
      for (int p = 0; p < g.label_count; ++p)
        if (g.labels[v][p]) out.set_label(v + i * g.n, p);
  }
  out.rebuild_adjacency();
  return out;
}

// Rolled product: q copies of the vertex set with every edge crossing to the
// next copy. Each (v, i) stays graded-bisimilar to v while all type
// multiplicities scale by q, which makes ratio pairs by construction.
inline LabeledGraph rolled_copies(const LabeledGraph& g, int q) {
  if (q < 1) throw std::invalid_argument("rolled_copies: q >= 1 required");
  LabeledGraph out(g.n * q, g.label_count);
  for (int i = 0; i < q; ++i) {
    int j = (i + 1) % q;
    for (auto& [u, v] : g.edges) out.add_edge(u + i * g.n, v + j * g.n);
    for (int v = 0; v < g.n; ++v)
      for (int p = 0; p < g.label_count; ++p)
        if (g.labels[v][p]) out.set_label(v + i * g.n, p);
  }
  out.rebuild_adjacency();
  return out;
}

// ---------------------------------------------------------------------------
// enumeration
// ---------------------------------------------------------------------------

// Every (edges, labeling) pair on exactly n vertices, no isomorphism
// reduction. Guarded to n <= 3 with at most 2 labels.
class ExhaustiveGraphs {
public:
  ExhaustiveGraphs(int n, int label_count) : n_(n), labels_(label_count) {
    if (n < 1 || n > 3 || label_count > 2)
      throw std::invalid_argument("ExhaustiveGraphs: guard requires n <= 3, labels <= 2");
    edge_slots_ = n * n;
    label_slots_ = n * label_count;
    total_ = (unsigned long long)1 << (edge_slots_ + label_slots_);
  }

  unsigned long long size() const { return total_; }

  LabeledGraph get(unsigned long long idx) const {
    LabeledGraph g(n_, labels_);
    unsigned long long e = idx & (((unsigned long long)1 << edge_slots_) - 1);
    unsigned long long l = idx >> edge_slots_;
    int slot = 0;
    for (int u = 0; u < n_; ++u)
      for (int v = 0; v < n_; ++v, ++slot)
        if ((e >> slot) & 1) g.add_edge(u, v);
    slot = 0;
    for (int v = 0; v < n_; ++v)
      for (int p = 0; p < labels_; ++p, ++slot)
        if ((l >> slot) & 1) g.set_label(v, p);
    g.rebuild_adjacency();
    return g;
  }

private:
  int n_, labels_, edge_slots_, label_slots_;
  unsigned long long total_;
};

// Deterministic uniform-random graphs: every edge and every (vertex, label)
// pair is present with probability 1/2.
inline LabeledGraph random_graph(std::mt19937_64& rng, int n, int label_count) {
  LabeledGraph g(n, label_count);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (rng() & 1) g.add_edge(u, v);
  for (int v = 0; v < n; ++v)
    for (int p = 0; p < label_count; ++p)
      if (rng() & 1) g.set_label(v, p);
  g.rebuild_adjacency();
  return g;
}

}  // namespace gtlogic
