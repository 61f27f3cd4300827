#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gtlogic/floatfmt.hpp"
#include "gtlogic/rational.hpp"

namespace gtlogic {

// The three numeric backends share one operation surface: field arithmetic,
// sqrt/exp, the activation functions, ordered multiset summation, and value
// (de)serialization for network files. Vertex-indexed sums always fold in
// ascending order; width-d sums follow the backend's width mode.
enum class WidthSumMode { ordered, left_to_right };

// --------------------------- exact rationals -------------------------------

struct ExactBackend {
  using Value = Rat;

  static constexpr const char* name = "exact";

  Value zero() const { return Rat(0); }
  Value one() const { return Rat(1); }
  Value from_int(long long v) const { return Rat(v); }
  Value from_fraction(long long n, long long d) const { return Rat(n, d); }

  Value add(const Value& a, const Value& b) const { return a + b; }
  Value sub(const Value& a, const Value& b) const { return a - b; }
  Value mul(const Value& a, const Value& b) const { return a * b; }
  Value div(const Value& a, const Value& b) const { return a / b; }
  Value sqrt(const Value& a) const { return a.sqrt_exact(); }

  // exp is admitted only where compiled networks need it: exact screens
  Value exp(const Value& a) const {
    if (a.is_zero()) return Rat(1);
    if (a.is_neg_inf()) return Rat(0);
    if (a.is_pos_inf()) return Rat::pos_inf();
    throw std::domain_error("exact backend: exp of nonzero finite value is irrational");
  }

  Value relu(const Value& a) const { return a.sgn() > 0 ? a : Rat(0); }
  Value trunc_relu(const Value& a) const {
    if (a.sgn() <= 0) return Rat(0);
    return cmp(a, Rat(1)) >= 0 ? Rat(1) : a;
  }
  Value heaviside(const Value& a) const { return a.sgn() > 0 ? Rat(1) : Rat(0); }

  bool is_nan(const Value&) const { return false; }
  bool is_zero(const Value& a) const { return a.is_finite() && a.is_zero(); }
  int compare(const Value& a, const Value& b) const { return cmp(a, b); }

  Value msum(std::vector<std::pair<Value, long long>> entries) const {
    Rat acc(0);
    for (auto& [v, c] : entries) acc = acc + v * Rat(c);
    return acc;
  }
  Value sum_width(const std::vector<Value>& vals) const {
    Rat acc(0);
    for (auto& v : vals) acc = acc + v;
    return acc;
  }
  Value count_to_value(long long c) const { return Rat(c); }

  std::string to_text(const Value& v) const { return v.to_string(); }
  Value from_text(const std::string& s) const { return Rat::from_string(s); }
  double to_report_double(const Value& v) const { return v.to_double(); }
};

// ------------------------------ binary64 -----------------------------------

struct DoubleBackend {
  using Value = double;

  static constexpr const char* name = "f64";

  Value zero() const { return 0.0; }
  Value one() const { return 1.0; }
  Value from_int(long long v) const { return (double)v; }
  Value from_fraction(long long n, long long d) const { return (double)n / (double)d; }

  Value add(Value a, Value b) const { return a + b; }
  Value sub(Value a, Value b) const { return a - b; }
  Value mul(Value a, Value b) const { return a * b; }
  Value div(Value a, Value b) const { return a / b; }
  Value sqrt(Value a) const { return std::sqrt(a); }
  Value exp(Value a) const { return std::exp(a); }

  Value relu(Value a) const { return a > 0 ? a : 0.0; }
  Value trunc_relu(Value a) const { return a <= 0 ? 0.0 : (a >= 1 ? 1.0 : a); }
  Value heaviside(Value a) const { return a > 0 ? 1.0 : 0.0; }

  bool is_nan(Value a) const { return std::isnan(a); }
  bool is_zero(Value a) const { return a == 0.0; }
  int compare(Value a, Value b) const { return a < b ? -1 : a > b ? 1 : 0; }

  // canonical ascending summation
  Value msum(std::vector<std::pair<Value, long long>> entries) const {
    std::vector<Value> xs;
    for (auto& [v, c] : entries) {
      if (std::isnan(v)) return v;
      for (long long i = 0; i < c; ++i) xs.push_back(v);
    }
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    Value acc = 0.0;
    for (Value v : xs) acc += v;
    return acc;
  }
  Value sum_width(std::vector<Value> vals) const {
    for (Value v : vals)
      if (std::isnan(v)) return v;
    std::sort(vals.begin(), vals.end());
    Value acc = 0.0;
    for (Value v : vals) acc += v;
    return acc;
  }
  Value count_to_value(long long c) const { return (double)c; }

  std::string to_text(Value v) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
  }
  Value from_text(const std::string& s) const { return std::strtod(s.c_str(), nullptr); }
  double to_report_double(Value v) const { return v; }
};

// ---------------------------- parametric floats ----------------------------

struct FloatBackend {
  using Value = FloatValue;

  FloatFormat fmt;
  WidthSumMode width_mode = WidthSumMode::ordered;
  AhMode ah_mode = AhMode::sum_denominator;

  static constexpr const char* name = "float";

  explicit FloatBackend(FloatFormat f, WidthSumMode m = WidthSumMode::ordered)
      : fmt(f), width_mode(m) {}

  Value zero() const { return FloatValue::zero(false); }
  Value one() const { return one_value(fmt); }
  Value from_int(long long v) const { return round_rat(fmt, Rat(v)); }
  Value from_fraction(long long n, long long d) const { return round_rat(fmt, Rat(n, d)); }

  Value add(const Value& a, const Value& b) const { return fadd(fmt, a, b); }
  Value sub(const Value& a, const Value& b) const { return fsub(fmt, a, b); }
  Value mul(const Value& a, const Value& b) const { return fmul(fmt, a, b); }
  Value div(const Value& a, const Value& b) const { return fdiv(fmt, a, b); }
  Value sqrt(const Value& a) const { return fsqrt(fmt, a); }
  Value exp(const Value& a) const { return fexp(fmt, a); }

  Value relu(const Value& a) const {
    if (a.is_nan()) return a;
    if (a.cls == FpClass::PosInf) return a;
    if (a.cls == FpClass::NegInf) return zero();
    return (!a.neg && !a.is_zero()) ? a : zero();
  }
  Value trunc_relu(const Value& a) const {
    if (a.is_nan()) return a;
    Value r = relu(a);
    if (r.is_finite() && compare_values(fmt, r, one()) >= 0) return one();
    if (r.cls == FpClass::PosInf) return one();
    return r;
  }
  Value heaviside(const Value& a) const {
    if (a.is_nan()) return a;
    if (a.cls == FpClass::PosInf) return one();
    if (a.cls == FpClass::NegInf) return zero();
    return (!a.neg && !a.is_zero()) ? one() : zero();
  }

  bool is_nan(const Value& a) const { return a.is_nan(); }
  bool is_zero(const Value& a) const { return a.is_zero(); }
  int compare(const Value& a, const Value& b) const { return compare_values(fmt, a, b); }

  Value msum(const std::vector<std::pair<Value, long long>>& entries) const {
    std::vector<FloatEntry> es;
    es.reserve(entries.size());
    long long total = 0;
    for (auto& [v, c] : entries) {
      es.push_back({v, c});
      total += c;
    }
    if (total == 0) return zero();
    return sum_increasing(fmt, es);
  }
  Value sum_width(const std::vector<Value>& vals) const {
    if (vals.empty()) return zero();
    if (width_mode == WidthSumMode::ordered) return sum_increasing(fmt, vals);
    Value acc = vals[0];
    for (size_t i = 1; i < vals.size(); ++i) acc = add(acc, vals[i]);
    return acc;
  }
  Value count_to_value(long long c) const {
    Value v = round_rat(fmt, Rat(c));
    return v.is_inf() ? max_finite(fmt) : v;
  }

  std::string to_text(const Value& v) const { return to_bits(fmt, v); }
  Value from_text(const std::string& s) const { return from_bits(fmt, s); }
  double to_report_double(const Value& v) const {
    if (v.is_nan()) return std::nan("");
    return decode(fmt, v).to_double();
  }
};

// ------------------------ shared row-level helpers --------------------------

// Dot product of a weight row against a value row. Zero weights contribute
// exact-zero products and are skipped unless the paired value is non-finite
// (0 * inf must still produce NaN).
template <class B>
typename B::Value dot_row(const B& b, const std::vector<typename B::Value>& w,
                          const std::vector<typename B::Value>& x) {
  std::vector<typename B::Value> prods;
  prods.reserve(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    if (b.is_zero(w[i])) {
      if constexpr (std::is_same_v<B, FloatBackend>) {
        if (x[i].is_finite()) continue;
      } else if constexpr (std::is_same_v<B, DoubleBackend>) {
        if (std::isfinite(x[i])) continue;
      } else {
        if (x[i].is_finite()) continue;
      }
    }
    prods.push_back(b.mul(w[i], x[i]));
  }
  return b.sum_width(prods);
}

// softmax over a typed row (distinct values with multiplicities): bias by the
// max, exponentiate, SUM the denominator in ascending order, divide.
template <class B>
std::vector<typename B::Value> softmax_typed(const B& b,
                                             const std::vector<typename B::Value>& vals,
                                             const std::vector<long long>& counts) {
  using V = typename B::Value;
  for (auto& v : vals)
    if (b.is_nan(v)) return std::vector<V>(vals.size(), v);
  size_t bi = 0;
  for (size_t i = 1; i < vals.size(); ++i)
    if (b.compare(vals[i], vals[bi]) > 0) bi = i;
  std::vector<V> exps;
  exps.reserve(vals.size());
  for (auto& v : vals) exps.push_back(b.exp(b.sub(v, vals[bi])));
  std::vector<std::pair<V, long long>> entries;
  for (size_t i = 0; i < vals.size(); ++i) entries.push_back({exps[i], counts[i]});
  V denom = b.msum(entries);
  std::vector<V> out;
  out.reserve(vals.size());
  for (auto& e : exps) out.push_back(b.div(e, denom));
  return out;
}

template <class B>
std::vector<typename B::Value> ah_typed(const B& b, const std::vector<typename B::Value>& vals,
                                        const std::vector<long long>& counts, AhMode mode) {
  using V = typename B::Value;
  for (auto& v : vals)
    if (b.is_nan(v)) return std::vector<V>(vals.size(), v);
  size_t bi = 0;
  for (size_t i = 1; i < vals.size(); ++i)
    if (b.compare(vals[i], vals[bi]) > 0) bi = i;
  long long sz = 0;
  std::vector<bool> is_max(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) {
    is_max[i] = b.compare(vals[i], vals[bi]) == 0;
    if (is_max[i]) sz += counts[i];
  }
  V denom;
  if (mode == AhMode::sum_denominator)
    denom = b.msum({{b.one(), sz}});
  else
    denom = b.count_to_value(sz);
  V share = b.div(b.one(), denom);
  std::vector<V> out(vals.size(), b.zero());
  for (size_t i = 0; i < vals.size(); ++i)
    if (is_max[i]) out[i] = share;
  return out;
}

}  // namespace gtlogic
