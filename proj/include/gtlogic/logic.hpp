#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtlogic/graphs.hpp"

namespace gtlogic {

// Formula AST of GML+GC. Grades are >= 1 after desugaring; D_{>=0} desugars
// to a Top-equivalent at parse time. The derived connectives |, ->, D_{<k}
// and D_{=k} are parser sugar.
enum class NodeKind : uint8_t { Top, Prop, Not, And, Dia, Glob };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  NodeKind kind;
  int prop = 0;        // Prop
  long long grade = 0; // Dia/Glob: k in D_{>=k}
  FormulaPtr left, right;

  static FormulaPtr top() { return std::make_shared<Formula>(Formula{NodeKind::Top}); }
  static FormulaPtr prop_node(int id) {
    Formula f{NodeKind::Prop};
    f.prop = id;
    return std::make_shared<Formula>(f);
  }
  static FormulaPtr negate(FormulaPtr a) {
    Formula f{NodeKind::Not};
    f.left = std::move(a);
    return std::make_shared<Formula>(f);
  }
  static FormulaPtr conj(FormulaPtr a, FormulaPtr b) {
    Formula f{NodeKind::And};
    f.left = std::move(a);
    f.right = std::move(b);
    return std::make_shared<Formula>(f);
  }
  static FormulaPtr dia(long long k, FormulaPtr a) {
    if (k == 0) return top();
    Formula f{NodeKind::Dia};
    f.grade = k;
    f.left = std::move(a);
    return std::make_shared<Formula>(f);
  }
  static FormulaPtr glob(long long k, FormulaPtr a) {
    if (k == 0) return top();
    Formula f{NodeKind::Glob};
    f.grade = k;
    f.left = std::move(a);
    return std::make_shared<Formula>(f);
  }
  static FormulaPtr disj(FormulaPtr a, FormulaPtr b) {
    return negate(conj(negate(std::move(a)), negate(std::move(b))));
  }
  static FormulaPtr implies(FormulaPtr a, FormulaPtr b) {
    return negate(conj(std::move(a), negate(std::move(b))));
  }
};

inline std::string to_string(const Formula& f) {
  switch (f.kind) {
    case NodeKind::Top: return "top";
    case NodeKind::Prop: return "p" + std::to_string(f.prop);
    case NodeKind::Not: return "!" + to_string(*f.left);
    case NodeKind::And: return "(" + to_string(*f.left) + " & " + to_string(*f.right) + ")";
    case NodeKind::Dia: return "dia>=" + std::to_string(f.grade) + " " + to_string(*f.left);
    case NodeKind::Glob: return "glob>=" + std::to_string(f.grade) + " " + to_string(*f.left);
  }
  return "";
}

// structural key used for subformula deduplication
inline std::string structural_key(const Formula& f) { return to_string(f); }

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

// Grammar (whitespace-insensitive, parentheses required around binary
// connectives):
//   f ::= top | pN | !f | (f & f) | (f | f) | (f -> f)
//       | dia f | dia>=K f | dia<K f | dia=K f
//       | glob f | glob>=K f | glob<K f | glob=K f
class FormulaParser {
public:
  explicit FormulaParser(std::string text) : text_(std::move(text)) {}

  FormulaPtr parse() {
    FormulaPtr f = parse_formula();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return f;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("formula syntax error at position " + std::to_string(pos_) +
                                ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace((unsigned char)text_[pos_])) ++pos_;
  }

  bool eat(const std::string& tok) {
    skip_ws();
    if (text_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  long long parse_number() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit((unsigned char)text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected number");
    return std::stoll(text_.substr(start, pos_ - start));
  }

  bool next_is_ident_char() const {
    return pos_ < text_.size() &&
           (std::isalnum((unsigned char)text_[pos_]) || text_[pos_] == '_');
  }

  bool eat_word(const std::string& w) {
    skip_ws();
    size_t save = pos_;
    if (text_.compare(pos_, w.size(), w) == 0) {
      pos_ += w.size();
      if (!next_is_ident_char()) return true;
      pos_ = save;
    }
    return false;
  }

  FormulaPtr parse_modal(bool global) {
    long long k = 1;
    enum { GE, LT, EQ } mode = GE;
    if (eat(">=")) {
      k = parse_number();
    } else if (eat("<")) {
      mode = LT;
      k = parse_number();
    } else if (eat("=")) {
      mode = EQ;
      k = parse_number();
    }
    FormulaPtr child = parse_formula();
    auto ge = [&](long long g, FormulaPtr c) {
      return global ? Formula::glob(g, std::move(c)) : Formula::dia(g, std::move(c));
    };
    switch (mode) {
      case GE: return ge(k, child);
      case LT: return Formula::negate(ge(k, child));
      case EQ: return Formula::conj(ge(k, child), Formula::negate(ge(k + 1, child)));
    }
    return nullptr;
  }

  FormulaPtr parse_formula() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (eat_word("top")) return Formula::top();
    if (eat_word("dia")) return parse_modal(false);
    if (eat_word("glob")) return parse_modal(true);
    char c = text_[pos_];
    if (c == '!') {
      ++pos_;
      return Formula::negate(parse_formula());
    }
    if (c == 'p') {
      ++pos_;
      long long id = parse_number();
      return Formula::prop_node((int)id);
    }
    if (c == '(') {
      ++pos_;
      FormulaPtr a = parse_formula();
      skip_ws();
      FormulaPtr out;
      if (eat("&"))
        out = Formula::conj(a, parse_formula());
      else if (eat("->"))
        out = Formula::implies(a, parse_formula());
      else if (eat("|"))
        out = Formula::disj(a, parse_formula());
      else
        out = a;  // plain grouping
      skip_ws();
      if (!eat(")")) fail("expected ')'");
      return out;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string text_;
  size_t pos_ = 0;
};

inline FormulaPtr parse_formula(const std::string& text) { return FormulaParser(text).parse(); }

// ---------------------------------------------------------------------------
// fragments
// ---------------------------------------------------------------------------

enum class FragmentTag : uint8_t { PL, PL_G, PL_GC, ML, ML_G, ML_GC, GML, GML_G, GML_GC };

inline std::string to_string(FragmentTag t) {
  switch (t) {
    case FragmentTag::PL: return "PL";
    case FragmentTag::PL_G: return "PL+G";
    case FragmentTag::PL_GC: return "PL+GC";
    case FragmentTag::ML: return "ML";
    case FragmentTag::ML_G: return "ML+G";
    case FragmentTag::ML_GC: return "ML+GC";
    case FragmentTag::GML: return "GML";
    case FragmentTag::GML_G: return "GML+G";
    case FragmentTag::GML_GC: return "GML+GC";
  }
  return "";
}

inline FragmentTag fragment_of(const Formula& f) {
  bool dia = false, graded_dia = false, glob = false, graded_glob = false;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    switch (g.kind) {
      case NodeKind::Dia:
        dia = true;
        if (g.grade >= 2) graded_dia = true;
        break;
      case NodeKind::Glob:
        glob = true;
        if (g.grade >= 2) graded_glob = true;
        break;
      default: break;
    }
    if (g.left) walk(*g.left);
    if (g.right) walk(*g.right);
  };
  walk(f);
  int base = !dia ? 0 : !graded_dia ? 1 : 2;   // PL / ML / GML
  int suff = !glob ? 0 : !graded_glob ? 1 : 2; // - / +G / +GC
  static const FragmentTag table[3][3] = {
      {FragmentTag::PL, FragmentTag::PL_G, FragmentTag::PL_GC},
      {FragmentTag::ML, FragmentTag::ML_G, FragmentTag::ML_GC},
      {FragmentTag::GML, FragmentTag::GML_G, FragmentTag::GML_GC},
  };
  return table[base][suff];
}

// lattice order: a included-in b
inline bool fragment_within(FragmentTag a, FragmentTag b) {
  auto base = [](FragmentTag t) { return (int)t / 3; };
  auto suff = [](FragmentTag t) { return (int)t % 3; };
  return base(a) <= base(b) && suff(a) <= suff(b);
}

// ---------------------------------------------------------------------------
// subformula enumeration and evaluation
// ---------------------------------------------------------------------------

// Deterministic post-order enumeration with structural deduplication;
// children precede parents, the root is last.
struct SubformulaIndex {
  std::vector<const Formula*> order;
  std::map<std::string, int> index;  // structural key -> position in order

  int of(const Formula& f) const { return index.at(structural_key(f)); }
};

inline SubformulaIndex enumerate_subformulas(const Formula& root) {
  SubformulaIndex out;
  std::function<void(const Formula&)> walk = [&](const Formula& f) {
    if (f.left) walk(*f.left);
    if (f.right) walk(*f.right);
    std::string key = structural_key(f);
    if (!out.index.count(key)) {
      out.index[key] = (int)out.order.size();
      out.order.push_back(&f);
    }
  };
  walk(root);
  return out;
}

inline int max_prop(const Formula& f) {
  int m = -1;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (g.kind == NodeKind::Prop) m = std::max(m, g.prop);
    if (g.left) walk(*g.left);
    if (g.right) walk(*g.right);
  };
  walk(f);
  return m;
}

inline long long max_grade(const Formula& f, bool global_only = false) {
  long long m = 0;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (g.kind == NodeKind::Glob || (!global_only && g.kind == NodeKind::Dia))
      m = std::max(m, g.grade);
    if (g.left) walk(*g.left);
    if (g.right) walk(*g.right);
  };
  walk(f);
  return m;
}

// Bottom-up model checker over the deduplicated subformula order.
inline std::vector<uint8_t> eval_formula(const LabeledGraph& g, const Formula& f) {
  if (max_prop(f) >= g.label_count)
    throw std::invalid_argument("eval: unknown proposition p" + std::to_string(max_prop(f)));
  SubformulaIndex subs = enumerate_subformulas(f);
  size_t n = g.n;
  std::vector<std::vector<uint8_t>> truth(subs.order.size(), std::vector<uint8_t>(n, 0));
  for (size_t i = 0; i < subs.order.size(); ++i) {
    const Formula& s = *subs.order[i];
    auto& row = truth[i];
    switch (s.kind) {
      case NodeKind::Top:
        std::fill(row.begin(), row.end(), 1);
        break;
      case NodeKind::Prop:
        for (size_t v = 0; v < n; ++v) row[v] = g.has_label(v, s.prop);
        break;
      case NodeKind::Not: {
        const auto& c = truth[subs.of(*s.left)];
        for (size_t v = 0; v < n; ++v) row[v] = !c[v];
        break;
      }
      case NodeKind::And: {
        const auto& a = truth[subs.of(*s.left)];
        const auto& b = truth[subs.of(*s.right)];
        for (size_t v = 0; v < n; ++v) row[v] = a[v] && b[v];
        break;
      }
      case NodeKind::Dia: {
        const auto& c = truth[subs.of(*s.left)];
        for (size_t v = 0; v < n; ++v) {
          long long cnt = 0;
          for (int u : g.out_neighbors((int)v)) cnt += c[u];
          row[v] = cnt >= s.grade;
        }
        break;
      }
      case NodeKind::Glob: {
        const auto& c = truth[subs.of(*s.left)];
        long long cnt = 0;
        for (size_t v = 0; v < n; ++v) cnt += c[v];
        std::fill(row.begin(), row.end(), cnt >= s.grade ? 1 : 0);
        break;
      }
    }
  }
  return truth[subs.of(f)];
}

}  // namespace gtlogic
