#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gtlogic/backend.hpp"
#include "gtlogic/graphs.hpp"

namespace gtlogic {

// Network descriptions are plain data, parameterized by the backend's value
// type. Conventions: perceptrons follow P(x) = act(b + W x) with W of shape
// (out x in); attention matrices W_Q/W_K/W_V are (d x d_h) and right-multiply
// feature rows, as do the A and C matrices of basic GPS layers.

template <class V>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<V> a;

  Mat() = default;
  Mat(int r, int c, const V& fill) : rows(r), cols(c), a((size_t)r * c, fill) {}

  V& at(int r, int c) { return a[(size_t)r * cols + c]; }
  const V& at(int r, int c) const { return a[(size_t)r * cols + c]; }
};

enum class Activation : uint8_t { relu, identity, heaviside, trunc_relu };

template <class V>
struct Perceptron {
  Mat<V> W;
  std::vector<V> b;
  Activation act = Activation::identity;
};

template <class V>
struct Mlp {
  std::vector<Perceptron<V>> layers;

  int in_dim() const { return layers.empty() ? 0 : layers.front().W.cols; }
  int out_dim() const { return layers.empty() ? 0 : layers.back().W.rows; }
  bool is_simple() const {
    return layers.size() == 2 && layers[0].act == Activation::relu &&
           layers[1].act == Activation::identity;
  }
};

template <class V>
struct AttnHead {
  Mat<V> wq, wk, wv;  // d x d_h

  int d() const { return wq.rows; }
  int dh() const { return wq.cols; }
};

enum class AttnKind : uint8_t { softmax, avg_hard, avg_hard_direct, unique_hard };

template <class V>
struct AttnModule {
  std::vector<AttnHead<V>> heads;
  Mat<V> wo;  // (k * d_h) x d
  AttnKind kind = AttnKind::softmax;
};

enum class AggKind : uint8_t { sum, max, set_sum, set_max, const_zero };

inline bool agg_is_set_based(AggKind k) {
  return k == AggKind::set_sum || k == AggKind::set_max || k == AggKind::const_zero;
}

template <class V>
struct MpModule {
  Mlp<V> com;  // (2d -> d)
  AggKind agg = AggKind::sum;
};

template <class V>
struct Readout {
  Mlp<V> f;  // (d -> d)
  AggKind agg = AggKind::sum;
};

template <class V>
struct LayerTransformer {
  AttnModule<V> sa;
  Mlp<V> ff;
};

template <class V>
struct LayerGps {
  AttnModule<V> sa;
  MpModule<V> mp;
  Mlp<V> ff;
};

template <class V>
struct LayerMp {
  MpModule<V> mp;
};

template <class V>
struct LayerMpReadout {
  MpModule<V> mp;
  Readout<V> readout;
  bool counting = true;  // descriptive; semantics follow readout.agg
};

// Basic GPS layer: out_v = act(x_v C + (sum over out-neighbors) A + H(x)_v + b),
// no skip connections.
template <class V>
struct LayerBasicGps {
  Activation act = Activation::heaviside;
  Mat<V> A, C;  // d x d, right-multiplying rows
  std::vector<V> bias;
  AttnHead<V> head;  // I/H dimension (d, d)
  AttnKind kind = AttnKind::softmax;
};

template <class V>
using Layer = std::variant<LayerTransformer<V>, LayerGps<V>, LayerMp<V>, LayerMpReadout<V>,
                           LayerBasicGps<V>>;

enum class NetworkKind : uint8_t { GT, GPS, GNN, GNN_G, GNN_GC, BasicGPS };

inline std::string to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::GT: return "gt";
    case NetworkKind::GPS: return "gps";
    case NetworkKind::GNN: return "gnn";
    case NetworkKind::GNN_G: return "gnn+g";
    case NetworkKind::GNN_GC: return "gnn+gc";
    case NetworkKind::BasicGPS: return "basic-gps";
  }
  return "";
}

inline NetworkKind network_kind_from(const std::string& s) {
  if (s == "gt") return NetworkKind::GT;
  if (s == "gps") return NetworkKind::GPS;
  if (s == "gnn") return NetworkKind::GNN;
  if (s == "gnn+g") return NetworkKind::GNN_G;
  if (s == "gnn+gc") return NetworkKind::GNN_GC;
  if (s == "basic-gps") return NetworkKind::BasicGPS;
  throw std::invalid_argument("unknown network kind: " + s);
}

template <class V>
struct Network {
  NetworkKind kind = NetworkKind::GT;
  int ell = 0;  // label alphabet size
  int d = 0;    // hidden dimension
  Mlp<V> initial;
  std::vector<Layer<V>> layers;
  Mlp<V> classifier;
};

// ---------------------------------------------------------------------------
// dimension validation
// ---------------------------------------------------------------------------

template <class V>
void validate_mlp(const Mlp<V>& m, const char* what) {
  if (m.layers.empty()) throw std::invalid_argument(std::string(what) + ": empty MLP");
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const auto& L = m.layers[i];
    if ((int)L.b.size() != L.W.rows)
      throw std::invalid_argument(std::string(what) + ": bias/row mismatch");
    if (i > 0 && m.layers[i - 1].W.rows != L.W.cols)
      throw std::invalid_argument(std::string(what) + ": chained dimensions disagree");
  }
  if (m.layers.back().act != Activation::identity)
    throw std::invalid_argument(std::string(what) + ": last layer must use identity");
}

template <class V>
void validate_attn(const AttnModule<V>& sa, int d, const char* what) {
  if (sa.heads.empty()) throw std::invalid_argument(std::string(what) + ": no heads");
  int dh = sa.heads[0].dh();
  for (const auto& h : sa.heads)
    if (h.d() != d || h.dh() != dh || h.wk.rows != d || h.wv.rows != d ||
        h.wk.cols != dh || h.wv.cols != dh)
      throw std::invalid_argument(std::string(what) + ": head dimensions disagree");
  if (sa.wo.rows != (int)sa.heads.size() * dh || sa.wo.cols != d)
    throw std::invalid_argument(std::string(what) + ": W_O shape mismatch");
}

template <class V>
void validate_network(const Network<V>& net) {
  validate_mlp(net.initial, "initial MLP");
  if (net.initial.in_dim() != net.ell) throw std::invalid_argument("initial MLP width != ell");
  if (net.initial.out_dim() != net.d) throw std::invalid_argument("initial MLP out != d");
  validate_mlp(net.classifier, "classifier");
  if (net.classifier.in_dim() != net.d || net.classifier.out_dim() != 1)
    throw std::invalid_argument("classifier must map d -> 1");
  for (const auto& layer : net.layers) {
    std::visit(
        [&](const auto& L) {
          using T = std::decay_t<decltype(L)>;
          if constexpr (std::is_same_v<T, LayerTransformer<V>>) {
            validate_attn(L.sa, net.d, "transformer SA");
            validate_mlp(L.ff, "transformer FF");
            if (L.ff.in_dim() != net.d || L.ff.out_dim() != net.d)
              throw std::invalid_argument("transformer FF must map d -> d");
          } else if constexpr (std::is_same_v<T, LayerGps<V>>) {
            validate_attn(L.sa, net.d, "GPS SA");
            validate_mlp(L.ff, "GPS FF");
            validate_mlp(L.mp.com, "GPS COM");
            if (L.mp.com.in_dim() != 2 * net.d || L.mp.com.out_dim() != net.d)
              throw std::invalid_argument("GPS COM must map 2d -> d");
          } else if constexpr (std::is_same_v<T, LayerMp<V>>) {
            validate_mlp(L.mp.com, "COM");
            if (L.mp.com.in_dim() != 2 * net.d || L.mp.com.out_dim() != net.d)
              throw std::invalid_argument("COM must map 2d -> d");
          } else if constexpr (std::is_same_v<T, LayerMpReadout<V>>) {
            validate_mlp(L.mp.com, "COM");
            validate_mlp(L.readout.f, "readout MLP");
            if (L.readout.f.in_dim() != net.d || L.readout.f.out_dim() != net.d)
              throw std::invalid_argument("readout must map d -> d");
            if (!L.counting && !agg_is_set_based(L.readout.agg))
              throw std::invalid_argument("non-counting readout needs a set-based aggregation");
          } else if constexpr (std::is_same_v<T, LayerBasicGps<V>>) {
            if (L.A.rows != net.d || L.A.cols != net.d || L.C.rows != net.d ||
                L.C.cols != net.d || (int)L.bias.size() != net.d)
              throw std::invalid_argument("basic layer shape mismatch");
            if (L.head.d() != net.d || L.head.dh() != net.d)
              throw std::invalid_argument("basic layer head must be (d, d)");
          }
        },
        layer);
  }
}

// ---------------------------------------------------------------------------
// forward evaluation
// ---------------------------------------------------------------------------

// Rows with multiplicities. Vertex-order evaluation uses one singleton group
// per vertex; edge-free networks may merge identical rows, which is exact
// because every operation is row-local or depends on row multisets only.
template <class V>
struct GroupedRows {
  std::vector<std::vector<V>> rows;
  std::vector<long long> count;

  size_t groups() const { return rows.size(); }
};

template <class B>
class Forward {
public:
  using V = typename B::Value;
  using Row = std::vector<V>;

  explicit Forward(B backend) : b(std::move(backend)) {}

  B b;

  Row mlp_row(const Mlp<V>& m, const Row& x) const {
    Row cur = x;
    for (const auto& L : m.layers) {
      Row next((size_t)L.W.rows);
      for (int j = 0; j < L.W.rows; ++j) {
        Row wrow(L.W.a.begin() + (size_t)j * L.W.cols,
                 L.W.a.begin() + (size_t)(j + 1) * L.W.cols);
        V dot = dot_row(b, wrow, cur);
        V pre = b.add(dot, L.b[j]);
        next[j] = activate(L.act, pre);
      }
      cur = std::move(next);
    }
    return cur;
  }

  V activate(Activation act, const V& x) const {
    switch (act) {
      case Activation::relu: return b.relu(x);
      case Activation::identity: return x;
      case Activation::heaviside: return b.heaviside(x);
      case Activation::trunc_relu: return b.trunc_relu(x);
    }
    return x;
  }

  // attention module over grouped rows; unique-hard requires singleton groups
  GroupedRows<V> attention(const AttnModule<V>& sa, const GroupedRows<V>& x) const {
    size_t g = x.groups();
    int d = sa.heads[0].d(), dh = sa.heads[0].dh();
    if (sa.kind == AttnKind::unique_hard)
      for (long long c : x.count)
        if (c != 1)
          throw std::invalid_argument("unique-hard attention requires per-vertex evaluation");
    // scaling by sqrt(d_h); the exact backend skips it for non-square d_h
    // (compilers fold the scale into W_Q in that case)
    bool do_scale = true;
    V scale = b.one();
    try {
      scale = b.sqrt(b.from_int(dh));
    } catch (const std::exception&) {
      do_scale = false;
    }
    std::vector<Mat<V>> head_out;
    head_out.reserve(sa.heads.size());
    for (const auto& h : sa.heads) {
      Mat<V> q = times(x.rows, h.wq), k = times(x.rows, h.wk), v = times(x.rows, h.wv);
      Mat<V> out((int)g, dh, b.zero());
      for (size_t i = 0; i < g; ++i) {
        // logits against every group
        std::vector<V> logits(g);
        for (size_t j = 0; j < g; ++j) {
          std::vector<V> prods(dh);
          for (int c = 0; c < dh; ++c) prods[c] = b.mul(q.at((int)i, c), k.at((int)j, c));
          V l = b.sum_width(prods);
          logits[j] = do_scale ? b.div(l, scale) : l;
        }
        std::vector<V> w = row_attention(sa.kind, logits, x.count);
        for (int c = 0; c < dh; ++c) {
          std::vector<std::pair<V, long long>> entries;
          entries.reserve(g);
          for (size_t j = 0; j < g; ++j) {
            if (b.is_zero(w[j]) && !b.is_nan(v.at((int)j, c))) continue;
            entries.push_back({b.mul(w[j], v.at((int)j, c)), x.count[j]});
          }
          out.at((int)i, c) = b.msum(entries);
        }
      }
      head_out.push_back(std::move(out));
    }
    // concatenate heads, multiply by W_O
    GroupedRows<V> res;
    res.count = x.count;
    res.rows.assign(g, Row((size_t)sa.wo.cols, b.zero()));
    for (size_t i = 0; i < g; ++i) {
      Row concat;
      concat.reserve(sa.heads.size() * dh);
      for (const auto& m : head_out)
        for (int c = 0; c < dh; ++c) concat.push_back(m.at((int)i, c));
      for (int c = 0; c < sa.wo.cols; ++c) {
        Row col((size_t)sa.wo.rows);
        for (int r = 0; r < sa.wo.rows; ++r) col[r] = sa.wo.at(r, c);
        res.rows[i][c] = dot_row(b, col, concat);
      }
    }
    return res;
  }

  std::vector<V> row_attention(AttnKind kind, const std::vector<V>& logits,
                               const std::vector<long long>& counts) const {
    switch (kind) {
      case AttnKind::softmax: return softmax_typed(b, logits, counts);
      case AttnKind::avg_hard: return ah_typed(b, logits, counts, AhMode::sum_denominator);
      case AttnKind::avg_hard_direct: return ah_typed(b, logits, counts, AhMode::direct_round);
      case AttnKind::unique_hard: {
        for (auto& l : logits)
          if (b.is_nan(l)) throw std::domain_error("unique-hard attention: NaN logits");
        auto bits = uh_row_generic(logits, [&](const V& p, const V& q) { return b.compare(p, q) < 0; });
        std::vector<V> out(logits.size());
        for (size_t i = 0; i < logits.size(); ++i) out[i] = bits[i] ? b.one() : b.zero();
        return out;
      }
    }
    return {};
  }

  // multiset aggregation of feature rows (AGG(empty) = 0)
  Row aggregate(AggKind agg, std::vector<Row> items, int d) const {
    Row zero((size_t)d, b.zero());
    if (agg == AggKind::const_zero || items.empty()) return zero;
    if (agg == AggKind::set_sum || agg == AggKind::set_max) {
      std::sort(items.begin(), items.end(), [&](const Row& x, const Row& y) {
        for (size_t c = 0; c < x.size(); ++c) {
          int cc = b.compare(x[c], y[c]);
          if (cc != 0) return cc < 0;
        }
        return false;
      });
      items.erase(std::unique(items.begin(), items.end(),
                              [&](const Row& x, const Row& y) {
                                for (size_t c = 0; c < x.size(); ++c)
                                  if (b.compare(x[c], y[c]) != 0) return false;
                                return true;
                              }),
                  items.end());
    }
    Row out((size_t)d, b.zero());
    if (agg == AggKind::sum || agg == AggKind::set_sum) {
      for (int c = 0; c < d; ++c) {
        std::vector<std::pair<V, long long>> entries;
        for (const auto& r : items) entries.push_back({r[c], 1});
        out[c] = b.msum(entries);
      }
    } else {  // max / set_max
      for (int c = 0; c < d; ++c) {
        V m = items[0][c];
        for (const auto& r : items) {
          if (b.is_nan(r[c])) return Row((size_t)d, r[c]);
          if (b.compare(r[c], m) > 0) m = r[c];
        }
        out[c] = m;
      }
    }
    return out;
  }

  Row mp_row(const MpModule<V>& mp, const Row& self, Row agg) const {
    Row input = self;
    input.insert(input.end(), agg.begin(), agg.end());
    return mlp_row(mp.com, input);
  }

  std::vector<Row> add_rows(const std::vector<Row>& x, const std::vector<Row>& y) const {
    std::vector<Row> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      out[i].resize(x[i].size());
      for (size_t c = 0; c < x[i].size(); ++c) out[i][c] = b.add(x[i][c], y[i][c]);
    }
    return out;
  }

  // vertex-order evaluation of one layer
  std::vector<Row> layer_rows(const Layer<V>& layer, const LabeledGraph& g,
                              const std::vector<Row>& x) const {
    size_t n = x.size();
    int d = (int)x[0].size();
    GroupedRows<V> grp{x, std::vector<long long>(n, 1)};
    return std::visit(
        [&](const auto& L) -> std::vector<Row> {
          using T = std::decay_t<decltype(L)>;
          if constexpr (std::is_same_v<T, LayerTransformer<V>>) {
            auto sa = attention(L.sa, grp);
            auto x1 = add_rows(x, sa.rows);
            std::vector<Row> ff(n);
            for (size_t i = 0; i < n; ++i) ff[i] = mlp_row(L.ff, x1[i]);
            return add_rows(x1, ff);
          } else if constexpr (std::is_same_v<T, LayerGps<V>>) {
            auto sa = attention(L.sa, grp);
            auto xs = add_rows(x, sa.rows);
            std::vector<Row> mp(n);
            for (size_t i = 0; i < n; ++i) {
              std::vector<Row> items;
              for (int u : g.out_neighbors((int)i)) items.push_back(x[u]);
              mp[i] = mp_row(L.mp, x[i], aggregate(L.mp.agg, std::move(items), d));
            }
            auto xm = add_rows(x, mp);
            auto xsm = add_rows(xs, xm);
            std::vector<Row> ff(n);
            for (size_t i = 0; i < n; ++i) ff[i] = mlp_row(L.ff, xsm[i]);
            return add_rows(xsm, ff);
          } else if constexpr (std::is_same_v<T, LayerMp<V>>) {
            std::vector<Row> mp(n);
            for (size_t i = 0; i < n; ++i) {
              std::vector<Row> items;
              for (int u : g.out_neighbors((int)i)) items.push_back(x[u]);
              mp[i] = mp_row(L.mp, x[i], aggregate(L.mp.agg, std::move(items), d));
            }
            return add_rows(x, mp);
          } else if constexpr (std::is_same_v<T, LayerMpReadout<V>>) {
            std::vector<Row> mp(n);
            for (size_t i = 0; i < n; ++i) {
              std::vector<Row> items;
              for (int u : g.out_neighbors((int)i)) items.push_back(x[u]);
              mp[i] = mp_row(L.mp, x[i], aggregate(L.mp.agg, std::move(items), d));
            }
            auto lhat = add_rows(x, mp);
            Row global = mlp_row(L.readout.f, aggregate(L.readout.agg, lhat, d));
            std::vector<Row> r(n, global);
            return add_rows(lhat, r);
          } else {  // LayerBasicGps
            AttnModule<V> module;
            module.heads = {L.head};
            module.kind = L.kind;
            // identity W_O so the head output lands unchanged
            module.wo = Mat<V>(d, d, b.zero());
            for (int i = 0; i < d; ++i) module.wo.at(i, i) = b.one();
            auto h = attention(module, grp);
            std::vector<Row> out(n, Row((size_t)d, b.zero()));
            for (size_t i = 0; i < n; ++i) {
              std::vector<Row> items;
              for (int u : g.out_neighbors((int)i)) items.push_back(x[u]);
              Row nb = aggregate(AggKind::sum, std::move(items), d);
              Row xc = times_row(x[i], L.C);
              Row na = times_row(nb, L.A);
              for (int c = 0; c < d; ++c) {
                V acc = b.add(b.add(b.add(xc[c], na[c]), h.rows[i][c]), L.bias[c]);
                out[i][c] = activate(L.act, acc);
              }
            }
            return out;
          }
        },
        layer);
  }

  std::vector<Row> label_rows(const Network<V>& net, const LabeledGraph& g) const {
    if (g.label_count != net.ell)
      throw std::invalid_argument("network/graph alphabet mismatch");
    std::vector<Row> rows(g.n, Row((size_t)net.ell, b.zero()));
    for (int v = 0; v < g.n; ++v)
      for (int p = 0; p < net.ell; ++p)
        if (g.labels[v][p]) rows[v][p] = b.one();
    return rows;
  }

  // full forward pass; when trace is non-null it receives lambda^(0) .. lambda^(k)
  std::vector<Row> network_rows(const Network<V>& net, const LabeledGraph& g,
                                std::vector<std::vector<Row>>* trace = nullptr) const {
    std::vector<Row> cur(g.n);
    auto labels = label_rows(net, g);
    for (int v = 0; v < g.n; ++v) cur[v] = mlp_row(net.initial, labels[v]);
    if (trace) trace->push_back(cur);
    for (const auto& layer : net.layers) {
      cur = layer_rows(layer, g, cur);
      if (trace) trace->push_back(cur);
    }
    return cur;
  }

  std::vector<V> network_scores(const Network<V>& net, const LabeledGraph& g) const {
    auto rows = network_rows(net, g);
    std::vector<V> out(rows.size());
    for (size_t v = 0; v < rows.size(); ++v) out[v] = mlp_row(net.classifier, rows[v])[0];
    return out;
  }

  std::vector<uint8_t> classify(const Network<V>& net, const LabeledGraph& g) const {
    auto scores = network_scores(net, g);
    std::vector<uint8_t> bits(scores.size());
    for (size_t v = 0; v < scores.size(); ++v) {
      if (b.is_nan(scores[v])) throw std::domain_error("classify: NaN score");
      bits[v] = b.compare(scores[v], b.zero()) > 0 ? 1 : 0;
    }
    return bits;
  }

  // Fast path for edge-free networks: merge vertices with identical label
  // rows and evaluate per group. Bit-exact because transformer layers depend
  // on row multisets only.
  std::vector<uint8_t> classify_merged(const Network<V>& net, const LabeledGraph& g) const {
    for (const auto& layer : net.layers)
      if (!std::holds_alternative<LayerTransformer<V>>(layer))
        throw std::invalid_argument("classify_merged: transformer layers only");
    auto labels = label_rows(net, g);
    std::map<std::vector<uint8_t>, int> group_of;
    std::vector<int> vertex_group(g.n);
    GroupedRows<V> grp;
    for (int v = 0; v < g.n; ++v) {
      std::vector<uint8_t> key(g.labels[v].begin(), g.labels[v].end());
      auto it = group_of.find(key);
      if (it == group_of.end()) {
        it = group_of.emplace(key, (int)grp.rows.size()).first;
        grp.rows.push_back(labels[v]);
        grp.count.push_back(0);
      }
      vertex_group[v] = it->second;
      grp.count[it->second] += 1;
    }
    for (auto& r : grp.rows) r = mlp_row(net.initial, r);
    for (const auto& layer : net.layers) {
      const auto& L = std::get<LayerTransformer<V>>(layer);
      auto sa = attention(L.sa, grp);
      for (size_t i = 0; i < grp.rows.size(); ++i) {
        Row x1(grp.rows[i].size());
        for (size_t c = 0; c < x1.size(); ++c) x1[c] = b.add(grp.rows[i][c], sa.rows[i][c]);
        Row ff = mlp_row(L.ff, x1);
        for (size_t c = 0; c < x1.size(); ++c) grp.rows[i][c] = b.add(x1[c], ff[c]);
      }
    }
    std::vector<uint8_t> group_bits(grp.rows.size());
    for (size_t i = 0; i < grp.rows.size(); ++i) {
      V y = mlp_row(net.classifier, grp.rows[i])[0];
      if (b.is_nan(y)) throw std::domain_error("classify: NaN score");
      group_bits[i] = b.compare(y, b.zero()) > 0 ? 1 : 0;
    }
    std::vector<uint8_t> bits(g.n);
    for (int v = 0; v < g.n; ++v) bits[v] = group_bits[vertex_group[v]];
    return bits;
  }

private:
  Mat<V> times(const std::vector<Row>& rows, const Mat<V>& m) const {
    Mat<V> out((int)rows.size(), m.cols, b.zero());
    for (size_t i = 0; i < rows.size(); ++i) {
      Row r = times_row(rows[i], m);
      for (int c = 0; c < m.cols; ++c) out.at((int)i, c) = r[c];
    }
    return out;
  }

  Row times_row(const Row& x, const Mat<V>& m) const {
    Row out((size_t)m.cols);
    for (int c = 0; c < m.cols; ++c) {
      Row col((size_t)m.rows);
      for (int r = 0; r < m.rows; ++r) col[r] = m.at(r, c);
      out[c] = dot_row(b, col, x);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
    case Activation::heaviside: return "heaviside";
    case Activation::trunc_relu: return "trunc-relu";
  }
  return "";
}

inline Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  if (s == "heaviside") return Activation::heaviside;
  if (s == "trunc-relu") return Activation::trunc_relu;
  throw std::invalid_argument("unknown activation: " + s);
}

inline std::string to_string(AttnKind k) {
  switch (k) {
    case AttnKind::softmax: return "softmax";
    case AttnKind::avg_hard: return "average-hard";
    case AttnKind::avg_hard_direct: return "average-hard-direct";
    case AttnKind::unique_hard: return "unique-hard";
  }
  return "";
}

inline AttnKind attn_kind_from(const std::string& s) {
  if (s == "softmax") return AttnKind::softmax;
  if (s == "average-hard") return AttnKind::avg_hard;
  if (s == "average-hard-direct") return AttnKind::avg_hard_direct;
  if (s == "unique-hard") return AttnKind::unique_hard;
  throw std::invalid_argument("unknown attention kind: " + s);
}

inline std::string to_string(AggKind k) {
  switch (k) {
    case AggKind::sum: return "sum";
    case AggKind::max: return "max";
    case AggKind::set_sum: return "set-sum";
    case AggKind::set_max: return "set-max";
    case AggKind::const_zero: return "const-zero";
  }
  return "";
}

inline AggKind agg_kind_from(const std::string& s) {
  if (s == "sum") return AggKind::sum;
  if (s == "max") return AggKind::max;
  if (s == "set-sum") return AggKind::set_sum;
  if (s == "set-max") return AggKind::set_max;
  if (s == "const-zero") return AggKind::const_zero;
  throw std::invalid_argument("unknown aggregation kind: " + s);
}

template <class B>
nlohmann::json mat_to_json(const B& b, const Mat<typename B::Value>& m) {
  nlohmann::json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  auto arr = nlohmann::json::array();
  for (const auto& v : m.a) arr.push_back(b.to_text(v));
  j["data"] = arr;  // row-major
  return j;
}

template <class B>
Mat<typename B::Value> mat_from_json(const B& b, const nlohmann::json& j) {
  Mat<typename B::Value> m;
  m.rows = j.at("rows").get<int>();
  m.cols = j.at("cols").get<int>();
  for (const auto& s : j.at("data")) m.a.push_back(b.from_text(s.get<std::string>()));
  if ((int)m.a.size() != m.rows * m.cols) throw std::invalid_argument("matrix size mismatch");
  return m;
}

template <class B>
nlohmann::json mlp_to_json(const B& b, const Mlp<typename B::Value>& m) {
  auto layers = nlohmann::json::array();
  for (const auto& L : m.layers) {
    nlohmann::json jl;
    jl["weight"] = mat_to_json(b, L.W);
    auto bias = nlohmann::json::array();
    for (const auto& v : L.b) bias.push_back(b.to_text(v));
    jl["bias"] = bias;
    jl["activation"] = to_string(L.act);
    layers.push_back(jl);
  }
  return nlohmann::json{{"layers", layers}};
}

template <class B>
Mlp<typename B::Value> mlp_from_json(const B& b, const nlohmann::json& j) {
  Mlp<typename B::Value> m;
  for (const auto& jl : j.at("layers")) {
    Perceptron<typename B::Value> L;
    L.W = mat_from_json(b, jl.at("weight"));
    for (const auto& s : jl.at("bias")) L.b.push_back(b.from_text(s.get<std::string>()));
    L.act = activation_from(jl.at("activation").get<std::string>());
    m.layers.push_back(std::move(L));
  }
  return m;
}

template <class B>
nlohmann::json attn_to_json(const B& b, const AttnModule<typename B::Value>& sa) {
  nlohmann::json j;
  auto heads = nlohmann::json::array();
  for (const auto& h : sa.heads)
    heads.push_back({{"wq", mat_to_json(b, h.wq)},
                     {"wk", mat_to_json(b, h.wk)},
                     {"wv", mat_to_json(b, h.wv)}});
  j["heads"] = heads;
  j["wo"] = mat_to_json(b, sa.wo);
  j["attention"] = to_string(sa.kind);
  return j;
}

template <class B>
AttnModule<typename B::Value> attn_from_json(const B& b, const nlohmann::json& j) {
  AttnModule<typename B::Value> sa;
  for (const auto& jh : j.at("heads")) {
    AttnHead<typename B::Value> h;
    h.wq = mat_from_json(b, jh.at("wq"));
    h.wk = mat_from_json(b, jh.at("wk"));
    h.wv = mat_from_json(b, jh.at("wv"));
    sa.heads.push_back(std::move(h));
  }
  sa.wo = mat_from_json(b, j.at("wo"));
  sa.kind = attn_kind_from(j.at("attention").get<std::string>());
  return sa;
}

template <class B>
nlohmann::json layer_to_json(const B& b, const Layer<typename B::Value>& layer) {
  using V = typename B::Value;
  return std::visit(
      [&](const auto& L) -> nlohmann::json {
        using T = std::decay_t<decltype(L)>;
        nlohmann::json j;
        if constexpr (std::is_same_v<T, LayerTransformer<V>>) {
          j["type"] = "transformer";
          j["sa"] = attn_to_json(b, L.sa);
          j["ff"] = mlp_to_json(b, L.ff);
        } else if constexpr (std::is_same_v<T, LayerGps<V>>) {
          j["type"] = "gps";
          j["sa"] = attn_to_json(b, L.sa);
          j["mp"] = {{"com", mlp_to_json(b, L.mp.com)}, {"agg", to_string(L.mp.agg)}};
          j["ff"] = mlp_to_json(b, L.ff);
        } else if constexpr (std::is_same_v<T, LayerMp<V>>) {
          j["type"] = "mp";
          j["mp"] = {{"com", mlp_to_json(b, L.mp.com)}, {"agg", to_string(L.mp.agg)}};
        } else if constexpr (std::is_same_v<T, LayerMpReadout<V>>) {
          j["type"] = "mp-readout";
          j["mp"] = {{"com", mlp_to_json(b, L.mp.com)}, {"agg", to_string(L.mp.agg)}};
          j["readout"] = {{"f", mlp_to_json(b, L.readout.f)}, {"agg", to_string(L.readout.agg)}};
          j["counting"] = L.counting;
        } else {
          j["type"] = "basic-gps";
          j["activation"] = to_string(L.act);
          j["A"] = mat_to_json(b, L.A);
          j["C"] = mat_to_json(b, L.C);
          auto bias = nlohmann::json::array();
          for (const auto& v : L.bias) bias.push_back(b.to_text(v));
          j["bias"] = bias;
          j["head"] = {{"wq", mat_to_json(b, L.head.wq)},
                       {"wk", mat_to_json(b, L.head.wk)},
                       {"wv", mat_to_json(b, L.head.wv)}};
          j["attention"] = to_string(L.kind);
        }
        return j;
      },
      layer);
}

template <class B>
Layer<typename B::Value> layer_from_json(const B& b, const nlohmann::json& j) {
  using V = typename B::Value;
  std::string type = j.at("type").get<std::string>();
  if (type == "transformer") {
    LayerTransformer<V> L;
    L.sa = attn_from_json(b, j.at("sa"));
    L.ff = mlp_from_json(b, j.at("ff"));
    return L;
  }
  if (type == "gps") {
    LayerGps<V> L;
    L.sa = attn_from_json(b, j.at("sa"));
    L.mp.com = mlp_from_json(b, j.at("mp").at("com"));
    L.mp.agg = agg_kind_from(j.at("mp").at("agg").get<std::string>());
    L.ff = mlp_from_json(b, j.at("ff"));
    return L;
  }
  if (type == "mp") {
    LayerMp<V> L;
    L.mp.com = mlp_from_json(b, j.at("mp").at("com"));
    L.mp.agg = agg_kind_from(j.at("mp").at("agg").get<std::string>());
    return L;
  }
  if (type == "mp-readout") {
    LayerMpReadout<V> L;
    L.mp.com = mlp_from_json(b, j.at("mp").at("com"));
    L.mp.agg = agg_kind_from(j.at("mp").at("agg").get<std::string>());
    L.readout.f = mlp_from_json(b, j.at("readout").at("f"));
    L.readout.agg = agg_kind_from(j.at("readout").at("agg").get<std::string>());
    L.counting = j.at("counting").get<bool>();
    return L;
  }
  if (type == "basic-gps") {
    LayerBasicGps<V> L;
    L.act = activation_from(j.at("activation").get<std::string>());
    L.A = mat_from_json(b, j.at("A"));
    L.C = mat_from_json(b, j.at("C"));
    for (const auto& s : j.at("bias")) L.bias.push_back(b.from_text(s.get<std::string>()));
    L.head.wq = mat_from_json(b, j.at("head").at("wq"));
    L.head.wk = mat_from_json(b, j.at("head").at("wk"));
    L.head.wv = mat_from_json(b, j.at("head").at("wv"));
    L.kind = attn_kind_from(j.at("attention").get<std::string>());
    return L;
  }
  throw std::invalid_argument("unknown layer type: " + type);
}

template <class B>
nlohmann::json network_to_json(const B& b, const Network<typename B::Value>& net) {
  nlohmann::json j;
  j["kind"] = to_string(net.kind);
  if constexpr (std::is_same_v<B, ExactBackend>)
    j["backend"] = "exact";
  else if constexpr (std::is_same_v<B, DoubleBackend>)
    j["backend"] = "f64";
  else
    j["backend"] = nlohmann::json{{"float", {{"p", b.fmt.p}, {"q", b.fmt.q}}}};
  j["ell"] = net.ell;
  j["d"] = net.d;
  j["initial_mlp"] = mlp_to_json(b, net.initial);
  auto layers = nlohmann::json::array();
  for (const auto& L : net.layers) layers.push_back(layer_to_json(b, L));
  j["layers"] = layers;
  j["classifier"] = mlp_to_json(b, net.classifier);
  return j;
}

template <class B>
Network<typename B::Value> network_from_json(const B& b, const nlohmann::json& j) {
  Network<typename B::Value> net;
  net.kind = network_kind_from(j.at("kind").get<std::string>());
  net.ell = j.at("ell").get<int>();
  net.d = j.at("d").get<int>();
  net.initial = mlp_from_json(b, j.at("initial_mlp"));
  for (const auto& jl : j.at("layers")) net.layers.push_back(layer_from_json(b, jl));
  net.classifier = mlp_from_json(b, j.at("classifier"));
  validate_network(net);
  return net;
}

// runtime-dispatched network file
struct LoadedNetwork {
  std::variant<Network<Rat>, Network<double>, Network<FloatValue>> net;
  std::optional<FloatFormat> fmt;
};

inline LoadedNetwork load_network(const nlohmann::json& j) {
  const auto& backend = j.at("backend");
  if (backend.is_string() && backend.get<std::string>() == "exact")
    return {network_from_json(ExactBackend{}, j), std::nullopt};
  if (backend.is_string() && backend.get<std::string>() == "f64")
    return {network_from_json(DoubleBackend{}, j), std::nullopt};
  if (backend.is_object() && backend.contains("float")) {
    FloatFormat fmt{backend.at("float").at("p").get<int>(), backend.at("float").at("q").get<int>()};
    fmt.validate();
    return {network_from_json(FloatBackend(fmt), j), fmt};
  }
  throw std::invalid_argument("unknown backend spec in network file");
}

}  // namespace gtlogic
