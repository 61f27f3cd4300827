#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "gtlogic/graphs.hpp"
#include "gtlogic/rational.hpp"

namespace gtlogic {

// Coarsest partition of V(g1) + V(g2) stable under vertex labels and the
// multiset of out-neighbor classes (the standard finite-graph equivalence for
// graded bisimulation: graded forth/back reduce to multiset equality).
struct TypePartition {
  int classes = 0;
  std::vector<int> class1, class2;        // vertex -> class id, per input graph
  std::vector<long long> count1, count2;  // class id -> multiplicity per graph

  bool realized_in_both(int c) const { return count1[c] > 0 && count2[c] > 0; }
};

inline TypePartition graded_partition(const LabeledGraph& g1, const LabeledGraph& g2) {
  int n1 = g1.n, n2 = g2.n, n = n1 + n2;
  auto labels_of = [&](int v) {
    return v < n1 ? g1.labels[v] : g2.labels[v - n1];
  };
  auto neighbors_of = [&](int v, std::vector<int>& out) {
    out.clear();
    if (v < n1)
      for (int u : g1.out_neighbors(v)) out.push_back(u);
    else
      for (int u : g2.out_neighbors(v - n1)) out.push_back(u + n1);
  };

  // initial partition by label set
  std::vector<int> cls(n);
  {
    std::map<std::vector<uint8_t>, int> ids;
    for (int v = 0; v < n; ++v) {
      auto l = labels_of(v);
      // normalize widths so p-absent and p-false coincide
      std::vector<uint8_t> key(l.begin(), l.end());
      while (!key.empty() && key.back() == 0) key.pop_back();
      auto it = ids.find(key);
      if (it == ids.end()) it = ids.emplace(key, (int)ids.size()).first;
      cls[v] = it->second;
    }
  }
  // refine to stability
  while (true) {
    std::map<std::pair<int, std::vector<int>>, int> ids;
    std::vector<int> next(n);
    std::vector<int> nb;
    for (int v = 0; v < n; ++v) {
      neighbors_of(v, nb);
      std::vector<int> sig;
      sig.reserve(nb.size());
      for (int u : nb) sig.push_back(cls[u]);
      std::sort(sig.begin(), sig.end());
      auto key = std::make_pair(cls[v], std::move(sig));
      auto it = ids.find(key);
      if (it == ids.end()) it = ids.emplace(std::move(key), (int)ids.size()).first;
      next[v] = it->second;
    }
    bool changed = false;
    for (int v = 0; v < n; ++v)
      if (next[v] != cls[v]) changed = true;
    cls = std::move(next);
    if (!changed) break;
  }

  TypePartition out;
  std::map<int, int> renumber;
  for (int v = 0; v < n; ++v)
    if (!renumber.count(cls[v])) renumber.emplace(cls[v], (int)renumber.size());
  out.classes = (int)renumber.size();
  out.class1.resize(n1);
  out.class2.resize(n2);
  out.count1.assign(out.classes, 0);
  out.count2.assign(out.classes, 0);
  for (int v = 0; v < n1; ++v) {
    out.class1[v] = renumber[cls[v]];
    out.count1[out.class1[v]]++;
  }
  for (int v = 0; v < n2; ++v) {
    out.class2[v] = renumber[cls[v + n1]];
    out.count2[out.class2[v]]++;
  }
  return out;
}

inline bool check_graded_bisim(const LabeledGraph& g1, int v1, const LabeledGraph& g2, int v2) {
  TypePartition p = graded_partition(g1, g2);
  return p.class1[v1] == p.class2[v2];
}

// graded bisimilar, plus every class realized in one graph is realized in the
// other (global forth/back)
inline bool check_global(const LabeledGraph& g1, int v1, const LabeledGraph& g2, int v2) {
  TypePartition p = graded_partition(g1, g2);
  if (p.class1[v1] != p.class2[v2]) return false;
  for (int c = 0; c < p.classes; ++c)
    if ((p.count1[c] > 0) != (p.count2[c] > 0)) return false;
  return true;
}

struct RatioWitness {
  Rat q;  // count1(t) = q * count2(t) for every type t, in lowest terms
};

inline std::optional<RatioWitness> check_ratio(const LabeledGraph& g1, int v1,
                                               const LabeledGraph& g2, int v2) {
  TypePartition p = graded_partition(g1, g2);
  if (p.class1[v1] != p.class2[v2]) return std::nullopt;
  std::optional<Rat> q;
  for (int c = 0; c < p.classes; ++c) {
    long long c1 = p.count1[c], c2 = p.count2[c];
    if (c1 == 0 && c2 == 0) continue;  // realized in neither: no constraint
    if (c1 == 0 || c2 == 0) return std::nullopt;
    Rat r(c1, c2);
    if (!q)
      q = r;
    else if (!(*q == r))
      return std::nullopt;
  }
  if (!q) return std::nullopt;
  return RatioWitness{*q};
}

// the edge-free analogue: same label set at the points plus one ratio over
// label-set multiplicities
inline std::optional<RatioWitness> label_ratio(const LabeledGraph& g1, int v1,
                                               const LabeledGraph& g2, int v2) {
  auto key = [&](const LabeledGraph& g, int v) {
    std::vector<uint8_t> k(g.labels[v].begin(), g.labels[v].end());
    while (!k.empty() && k.back() == 0) k.pop_back();
    return k;
  };
  if (key(g1, v1) != key(g2, v2)) return std::nullopt;
  std::map<std::vector<uint8_t>, std::pair<long long, long long>> counts;
  for (int v = 0; v < g1.n; ++v) counts[key(g1, v)].first++;
  for (int v = 0; v < g2.n; ++v) counts[key(g2, v)].second++;
  std::optional<Rat> q;
  for (auto& [k, c] : counts) {
    if (c.first == 0 || c.second == 0) return std::nullopt;
    Rat r(c.first, c.second);
    if (!q)
      q = r;
    else if (!(*q == r))
      return std::nullopt;
  }
  return RatioWitness{q.value_or(Rat(1))};
}

// ---------------------------------------------------------------------------
// bounded bisimulation games
// ---------------------------------------------------------------------------

enum class GameVariant : uint8_t { down_only, up_down, up_ungraded_down_graded };

struct GameConfig {
  int c = 1;       // max set size per graded move
  int rounds = 0;  // number of rounds
  GameVariant variant = GameVariant::down_only;
  long long budget = 200000000;  // position-evaluation guard
};

namespace bisim_detail {

// all non-empty subsets of `pool` of size at most c
inline void subsets_up_to(const std::vector<int>& pool, int c,
                          std::vector<std::vector<int>>& out) {
  out.clear();
  int n = (int)pool.size();
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (!cur.empty()) out.push_back(cur);
    if ((int)cur.size() == c) return;
    for (int i = start; i < n; ++i) {
      cur.push_back(pool[i]);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

struct GameSolver {
  const LabeledGraph& g1;
  const LabeledGraph& g2;
  GameConfig cfg;
  // memo over (v1, v2, rounds); the game is positionally determined
  std::map<std::tuple<int, int, int>, bool> memo;
  long long work = 0;

  GameSolver(const LabeledGraph& a, const LabeledGraph& b, GameConfig c) : g1(a), g2(b), cfg(c) {}

  bool labels_equal(int v1, int v2) const {
    auto k1 = g1.labels[v1], k2 = g2.labels[v2];
    size_t w = std::max(k1.size(), k2.size());
    k1.resize(w, 0);
    k2.resize(w, 0);
    return k1 == k2;
  }

  // duplicator survives one graded challenge: spoiler set S from `mine`,
  // duplicator set T from `theirs` of equal size, then for every spoiler pick
  // t in T duplicator picks s in S with win(s, t)
  bool survives_graded(const std::vector<int>& mine, const std::vector<int>& theirs, int rounds,
                       bool mine_is_g1) {
    std::vector<std::vector<int>> spoiler_sets, dup_sets;
    subsets_up_to(mine, cfg.c, spoiler_sets);
    subsets_up_to(theirs, cfg.c, dup_sets);
    for (const auto& S : spoiler_sets) {
      bool answered = false;
      for (const auto& T : dup_sets) {
        if (T.size() != S.size()) continue;
        bool all_ok = true;
        for (int t : T) {
          bool exists = false;
          for (int s : S) {
            bool w = mine_is_g1 ? win(s, t, rounds - 1) : win(t, s, rounds - 1);
            if (w) {
              exists = true;
              break;
            }
          }
          if (!exists) {
            all_ok = false;
            break;
          }
        }
        if (all_ok) {
          answered = true;
          break;
        }
      }
      if (!answered) return false;
    }
    return true;
  }

  // duplicator survives an ungraded up challenge: spoiler picks one
  // predecessor on either side, duplicator answers with one on the other
  bool survives_ungraded(const std::vector<int>& mine, const std::vector<int>& theirs, int rounds,
                         bool mine_is_g1) {
    for (int s : mine) {
      bool exists = false;
      for (int t : theirs) {
        bool w = mine_is_g1 ? win(s, t, rounds - 1) : win(t, s, rounds - 1);
        if (w) {
          exists = true;
          break;
        }
      }
      if (!exists) return false;
    }
    return true;
  }

  bool win(int v1, int v2, int rounds) {
    if (++work > cfg.budget) throw std::runtime_error("play_game: budget exceeded");
    if (!labels_equal(v1, v2)) return false;
    if (rounds <= 0) return true;
    auto key = std::make_tuple(v1, v2, rounds);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    memo.emplace(key, false);  // provisional; cycles impossible (rounds decrease)
    bool ok = survives_graded(g1.out_neighbors(v1), g2.out_neighbors(v2), rounds, true) &&
              survives_graded(g2.out_neighbors(v2), g1.out_neighbors(v1), rounds, false);
    if (ok && cfg.variant == GameVariant::up_down)
      ok = survives_graded(g1.predecessors(v1), g2.predecessors(v2), rounds, true) &&
           survives_graded(g2.predecessors(v2), g1.predecessors(v1), rounds, false);
    if (ok && cfg.variant == GameVariant::up_ungraded_down_graded)
      ok = survives_ungraded(g1.predecessors(v1), g2.predecessors(v2), rounds, true) &&
           survives_ungraded(g2.predecessors(v2), g1.predecessors(v1), rounds, false);
    memo[key] = ok;
    return ok;
  }
};

}  // namespace bisim_detail

// true iff duplicator wins the c-graded rounds-round game from (v1, v2)
inline bool play_game(const LabeledGraph& g1, int v1, const LabeledGraph& g2, int v2,
                      const GameConfig& cfg) {
  if (cfg.c < 0 || cfg.rounds < 0) throw std::invalid_argument("play_game: bad config");
  bisim_detail::GameSolver solver(g1, g2, cfg);
  return solver.win(v1, v2, cfg.rounds);
}

}  // namespace gtlogic
