#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <mpfr.h>

#include "gtlogic/rational.hpp"

namespace gtlogic {

// Parametric floating-point format F(p,q): p significand bits, q exponent
// bits. Finite values are the normalized (leading significand bit 1, any
// exponent field) and subnormalized (leading bit 0, exponent field 0) strings,
// interpreted as (-1)^b0 * (s/2^(p-1)) * 2^(e - 2^(q-1)). The pattern
// s = 0, e = all-ones is reserved for +/-infinity. NaN is out of band.
struct FloatFormat {
  int p = 0;
  int q = 0;

  bool operator==(const FloatFormat& o) const { return p == o.p && q == o.q; }
  bool operator<(const FloatFormat& o) const { return p != o.p ? p < o.p : q < o.q; }

  long long a() const { return 1LL << (p - 1); }       // significand scale 2^(p-1)
  long long bias() const { return 1LL << (q - 1); }    // exponent bias 2^(q-1)
  long long emax_field() const { return (1LL << q) - 1; }
  // exponent of one significand unit: value = s * 2^(e + unit_exp())
  long long unit_exp() const { return -bias() - (p - 1); }
  // finite values including both zeros
  long long finite_count() const {
    return 2 * ((1LL << p) + emax_field() * (1LL << (p - 1)));
  }

  void validate() const {
    if (p < 1 || q < 1 || p > 24 || q > 20)
      throw std::invalid_argument("FloatFormat: p,q out of supported range");
  }
};

enum class FpClass : uint8_t { Finite, PosInf, NegInf, NaN };

struct FloatValue {
  FpClass cls = FpClass::NaN;
  bool neg = false;
  uint32_t e = 0;
  uint64_t s = 0;

  static FloatValue finite(bool neg, uint32_t e, uint64_t s) {
    return FloatValue{FpClass::Finite, neg, e, s};
  }
  static FloatValue zero(bool neg = false) { return finite(neg, 0, 0); }
  static FloatValue pos_inf() { return FloatValue{FpClass::PosInf, false, 0, 0}; }
  static FloatValue neg_inf() { return FloatValue{FpClass::NegInf, true, 0, 0}; }
  static FloatValue nan() { return FloatValue{FpClass::NaN, false, 0, 0}; }

  bool is_finite() const { return cls == FpClass::Finite; }
  bool is_nan() const { return cls == FpClass::NaN; }
  bool is_inf() const { return cls == FpClass::PosInf || cls == FpClass::NegInf; }
  bool is_zero() const { return cls == FpClass::Finite && s == 0 && e == 0; }

  // bit-identity, distinguishes -0 from +0
  bool operator==(const FloatValue& o) const {
    return cls == o.cls && neg == o.neg && e == o.e && s == o.s;
  }
  bool operator!=(const FloatValue& o) const { return !(*this == o); }
};

struct FloatValueHash {
  size_t operator()(const FloatValue& v) const {
    size_t h = (size_t)v.cls * 0x9e3779b97f4a7c15ull;
    h ^= (v.neg ? 0x517cc1b727220a95ull : 0) + (h << 6);
    h ^= ((size_t)v.e * 0xff51afd7ed558ccdull) + (h << 6) + (h >> 2);
    h ^= ((size_t)v.s * 0xc4ceb9fe1a85ec53ull) + (h << 6) + (h >> 2);
    return h;
  }
};

namespace fp_detail {

inline int bitlen(uint64_t x) {
  return x == 0 ? 0 : 64 - __builtin_clzll(x);
}

inline uint64_t isqrt64(uint64_t v) {
  if (v == 0) return 0;
  uint64_t r = (uint64_t)std::sqrt((double)v);
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

}  // namespace fp_detail

// ---------------------------------------------------------------------------
// validity, decode, encode
// ---------------------------------------------------------------------------

inline bool valid_in(const FloatFormat& f, const FloatValue& v) {
  if (!v.is_finite()) return true;
  if (v.e > (uint64_t)f.emax_field() || v.s >= (1ull << f.p)) return false;
  if (v.s >= (uint64_t)f.a()) return true;          // normalized
  if (v.e == 0) return true;                        // subnormal (incl. zero)
  return false;                                     // leading bit 0 needs e = 0
}

inline Rat decode(const FloatFormat& f, const FloatValue& v) {
  switch (v.cls) {
    case FpClass::PosInf: return Rat::pos_inf();
    case FpClass::NegInf: return Rat::neg_inf();
    case FpClass::NaN: throw std::domain_error("decode: no real denotation for NaN");
    case FpClass::Finite: break;
  }
  Rat m((long long)v.s);
  if (v.neg) m = -m;
  return m.mul_pow2((long)(v.e + f.unit_exp()));
}

// Exact numeric comparison (-0 == +0). NaN is not comparable.
inline int compare_values(const FloatFormat& f, const FloatValue& a, const FloatValue& b) {
  if (a.is_nan() || b.is_nan()) throw std::domain_error("compare: NaN");
  auto rank = [](const FloatValue& v) { return v.cls == FpClass::NegInf ? -1 : v.cls == FpClass::PosInf ? 1 : 0; };
  int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (ra != 0) return 0;
  bool za = a.s == 0, zb = b.s == 0;
  if (za && zb) return 0;
  int sa = za ? 0 : (a.neg ? -1 : 1), sb = zb ? 0 : (b.neg ? -1 : 1);
  if (sa != sb) return sa < sb ? -1 : 1;
  // same nonzero sign: compare magnitudes s*2^e
  long long ta = fp_detail::bitlen(a.s) + (long long)a.e;
  long long tb = fp_detail::bitlen(b.s) + (long long)b.e;
  int magcmp;
  if (ta != tb) {
    magcmp = ta < tb ? -1 : 1;
  } else {
    long long sh = (long long)a.e - (long long)b.e;  // |sh| < p
    uint64_t ma = a.s, mb = b.s;
    if (sh > 0) ma <<= sh; else mb <<= -sh;
    magcmp = ma < mb ? -1 : ma > mb ? 1 : 0;
  }
  return sa > 0 ? magcmp : -magcmp;
}

inline std::string to_bits(const FloatFormat& f, const FloatValue& v) {
  switch (v.cls) {
    case FpClass::PosInf: return "+inf";
    case FpClass::NegInf: return "-inf";
    case FpClass::NaN: return "nan";
    case FpClass::Finite: break;
  }
  std::string out;
  out += v.neg ? '1' : '0';
  out += '|';
  for (int i = f.q - 1; i >= 0; --i) out += ((v.e >> i) & 1) ? '1' : '0';
  out += '|';
  for (int i = f.p - 1; i >= 0; --i) out += ((v.s >> i) & 1) ? '1' : '0';
  return out;
}

inline FloatValue from_bits(const FloatFormat& f, const std::string& text) {
  if (text == "+inf" || text == "inf") return FloatValue::pos_inf();
  if (text == "-inf") return FloatValue::neg_inf();
  if (text == "nan") return FloatValue::nan();
  std::string bits;
  for (char c : text)
    if (c == '0' || c == '1') bits += c;
  if ((int)bits.size() != 1 + f.p + f.q)
    throw std::invalid_argument("FloatValue: bit string width mismatch: " + text);
  bool neg = bits[0] == '1';
  uint32_t e = 0;
  uint64_t s = 0;
  for (int i = 0; i < f.q; ++i) e = (e << 1) | (bits[1 + i] == '1');
  for (int i = 0; i < f.p; ++i) s = (s << 1) | (bits[1 + f.q + i] == '1');
  FloatValue v = FloatValue::finite(neg, e, s);
  if (e == (uint64_t)f.emax_field() && s == 0) return neg ? FloatValue::neg_inf() : FloatValue::pos_inf();
  if (!valid_in(f, v)) throw std::invalid_argument("FloatValue: invalid pattern: " + text);
  return v;
}

inline FloatValue min_pos(const FloatFormat& f) { return FloatValue::finite(false, 0, 1); }
inline FloatValue max_finite(const FloatFormat& f) {
  return FloatValue::finite(false, (uint32_t)f.emax_field(), (1ull << f.p) - 1);
}
inline FloatValue one_value(const FloatFormat& f) {
  return FloatValue::finite(false, (uint32_t)f.bias(), (uint64_t)f.a());
}

// All finite values, ascending, -0 before +0.
inline std::vector<FloatValue> enumerate_finite(const FloatFormat& f) {
  std::vector<FloatValue> mags;  // positive magnitudes ascending, zero excluded
  for (uint64_t s = 1; s < (uint64_t)f.a(); ++s) mags.push_back(FloatValue::finite(false, 0, s));
  for (long long e = 0; e <= f.emax_field(); ++e)
    for (uint64_t s = (uint64_t)f.a(); s < (1ull << f.p); ++s)
      mags.push_back(FloatValue::finite(false, (uint32_t)e, s));
  std::vector<FloatValue> out;
  out.reserve(2 * mags.size() + 2);
  for (auto it = mags.rbegin(); it != mags.rend(); ++it)
    out.push_back(FloatValue::finite(true, it->e, it->s));
  out.push_back(FloatValue::zero(true));
  out.push_back(FloatValue::zero(false));
  for (auto& v : mags) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// rounding core
// ---------------------------------------------------------------------------

// Round-to-nearest, ties-to-even of the exact magnitude M * 2^E (plus an
// unrepresented tail in (0, 2^E) when sticky is set) onto the format grid,
// with the exponent unbounded above; exponent overflow then maps to infinity.
// The sign only selects the zero/infinity flavor.
inline FloatValue round_mag(const FloatFormat& f, bool neg, uint64_t M, long long E, bool sticky) {
  if (M == 0 && !sticky) return FloatValue::zero(neg);
  const long long Umin = f.unit_exp();
  // working width: keep M in at most p+6 bits so shifts stay in range
  while (M >= (1ull << (f.p + 6))) {
    sticky = sticky || (M & 1);
    M >>= 1;
    ++E;
  }
  long long top = fp_detail::bitlen(M) - 1 + E;  // floor(log2(value)), ignoring sticky tail
  long long U = std::max(top - (f.p - 1), Umin);
  uint64_t keep;
  bool up = false;
  if (E >= U) {
    assert(!sticky);
    keep = M << (E - U);
  } else {
    long long shift = U - E;
    if (shift > 62) {
      // entire mantissa below one grid unit
      if (top < U - 1) {
        keep = 0;
      } else {  // top == U-1: value in [half, unit)
        bool exact_half = ((M & (M - 1)) == 0) && !sticky;
        keep = exact_half ? 0 : 1;  // tie to even 0, otherwise above half
      }
    } else {
      keep = M >> shift;
      uint64_t rem = M & ((1ull << shift) - 1);
      uint64_t half = 1ull << (shift - 1);
      if (rem > half || (rem == half && sticky))
        up = true;
      else if (rem == half && !sticky)
        up = (keep & 1) != 0;
      if (up) {
        ++keep;
        if (keep == (1ull << f.p)) {
          keep >>= 1;
          ++U;
        }
      }
    }
  }
  if (keep == 0) return FloatValue::zero(neg);
  if (keep >= (uint64_t)f.a()) {
    long long efield = U - f.unit_exp();
    if (efield > f.emax_field()) return neg ? FloatValue::neg_inf() : FloatValue::pos_inf();
    assert(efield >= 0);
    return FloatValue::finite(neg, (uint32_t)efield, keep);
  }
  assert(U == Umin);
  return FloatValue::finite(neg, 0, keep);
}

// Round an exact rational (or +/-infinity) to the format. An exact zero gives
// +0; a nonzero value that underflows keeps its sign on the resulting zero.
inline FloatValue round_rat(const FloatFormat& f, const Rat& x) {
  if (x.is_pos_inf()) return FloatValue::pos_inf();
  if (x.is_neg_inf()) return FloatValue::neg_inf();
  if (x.is_zero()) return FloatValue::zero(false);
  bool neg = x.sgn() < 0;
  mpq_class mag = (neg ? -x : x).to_mpq();
  // floor(log2(mag)) via bit sizes, corrected by exact comparison
  long long top = (long long)mpz_sizeinbase(mag.get_num().get_mpz_t(), 2) -
                  (long long)mpz_sizeinbase(mag.get_den().get_mpz_t(), 2);
  auto cmp_pow2 = [&](long long k) {
    mpq_class p2(1);
    if (k >= 0)
      mpq_mul_2exp(p2.get_mpq_t(), p2.get_mpq_t(), (unsigned long)k);
    else
      mpq_div_2exp(p2.get_mpq_t(), p2.get_mpq_t(), (unsigned long)(-k));
    return ::cmp(mag, p2);
  };
  while (cmp_pow2(top) < 0) --top;
  while (cmp_pow2(top + 1) >= 0) ++top;
  long long U = std::max(top - (f.p - 1), f.unit_exp());
  // scaled = mag / 2^U; round_half_even(scaled)
  mpq_class scaled = mag;
  if (U >= 0)
    mpq_div_2exp(scaled.get_mpq_t(), scaled.get_mpq_t(), (unsigned long)U);
  else
    mpq_mul_2exp(scaled.get_mpq_t(), scaled.get_mpq_t(), (unsigned long)(-U));
  mpz_class ip, rem;
  mpz_fdiv_qr(ip.get_mpz_t(), rem.get_mpz_t(), scaled.get_num().get_mpz_t(), scaled.get_den().get_mpz_t());
  mpz_class twice = rem * 2;
  int c = ::cmp(twice, mpz_class(scaled.get_den()));
  if (c > 0 || (c == 0 && mpz_odd_p(ip.get_mpz_t())))
    ip += 1;
  uint64_t keep = mpz_get_ui(ip.get_mpz_t());
  if (ip == 0) return FloatValue::zero(neg);
  if (keep == (1ull << f.p)) {
    keep >>= 1;
    ++U;
  }
  assert(keep < (1ull << f.p));
  if (keep >= (uint64_t)f.a()) {
    long long efield = U - f.unit_exp();
    if (efield > f.emax_field()) return neg ? FloatValue::neg_inf() : FloatValue::pos_inf();
    return FloatValue::finite(neg, (uint32_t)efield, keep);
  }
  return FloatValue::finite(neg, 0, keep);
}

// ---------------------------------------------------------------------------
// arithmetic (integer significand core, guard/round/sticky)
// ---------------------------------------------------------------------------

namespace fp_detail {

struct Unpacked {
  bool neg;
  uint64_t m;    // significand field, value = m * 2^E
  long long E;
};

inline Unpacked unpack(const FloatFormat& f, const FloatValue& v) {
  return Unpacked{v.neg, v.s, (long long)v.e + f.unit_exp()};
}

inline void normalize(const FloatFormat& f, uint64_t& m, long long& E) {
  while (m < (uint64_t)f.a()) {
    m <<= 1;
    --E;
  }
}

}  // namespace fp_detail

inline FloatValue fadd(const FloatFormat& f, const FloatValue& a, const FloatValue& b) {
  using namespace fp_detail;
  if (a.is_nan() || b.is_nan()) return FloatValue::nan();
  if (a.is_inf() || b.is_inf()) {
    if (a.is_inf() && b.is_inf())
      return a.cls == b.cls ? a : FloatValue::nan();
    return a.is_inf() ? a : b;
  }
  if (a.is_zero() && b.is_zero()) return FloatValue::zero(a.neg && b.neg);
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  Unpacked x = unpack(f, a), y = unpack(f, b);
  if (x.E < y.E) std::swap(x, y);
  long long shift = x.E - y.E;
  if (x.neg == y.neg) {
    if (shift <= f.p + 5) {
      uint64_t M = (x.m << shift) + y.m;
      return round_mag(f, x.neg, M, y.E, false);
    }
    uint64_t M = x.m << (f.p + 5);
    return round_mag(f, x.neg, M, x.E - (f.p + 5), y.m != 0);
  }
  // opposite signs
  if (shift <= f.p + 5) {
    uint64_t mx = x.m << shift;
    if (mx == y.m) return FloatValue::zero(false);  // exact cancellation
    if (mx > y.m) return round_mag(f, x.neg, mx - y.m, y.E, false);
    return round_mag(f, y.neg, y.m - mx, y.E, false);
  }
  // |x| dominates; borrow one unit and mark the subtracted tail as sticky
  uint64_t M = (x.m << (f.p + 5)) - 1;
  return round_mag(f, x.neg, M, x.E - (f.p + 5), true);
}

inline FloatValue fneg(const FloatValue& a) {
  switch (a.cls) {
    case FpClass::NaN: return a;
    case FpClass::PosInf: return FloatValue::neg_inf();
    case FpClass::NegInf: return FloatValue::pos_inf();
    case FpClass::Finite: return FloatValue::finite(!a.neg, a.e, a.s);
  }
  return a;
}

inline FloatValue fsub(const FloatFormat& f, const FloatValue& a, const FloatValue& b) {
  return fadd(f, a, fneg(b));
}

inline FloatValue fmul(const FloatFormat& f, const FloatValue& a, const FloatValue& b) {
  using namespace fp_detail;
  if (a.is_nan() || b.is_nan()) return FloatValue::nan();
  bool neg = (a.neg != b.neg);
  if (a.is_inf() || b.is_inf()) {
    if (a.is_zero() || b.is_zero()) return FloatValue::nan();  // 0 * inf
    return neg ? FloatValue::neg_inf() : FloatValue::pos_inf();
  }
  if (a.is_zero() || b.is_zero()) return FloatValue::zero(neg);
  Unpacked x = unpack(f, a), y = unpack(f, b);
  return round_mag(f, neg, x.m * y.m, x.E + y.E, false);
}

inline FloatValue fdiv(const FloatFormat& f, const FloatValue& a, const FloatValue& b) {
  using namespace fp_detail;
  if (a.is_nan() || b.is_nan()) return FloatValue::nan();
  bool neg = (a.neg != b.neg);
  if (a.is_inf()) {
    if (b.is_inf()) return FloatValue::nan();
    return neg ? FloatValue::neg_inf() : FloatValue::pos_inf();
  }
  if (b.is_inf()) return FloatValue::zero(neg);
  if (b.is_zero()) {
    if (a.is_zero()) return FloatValue::nan();  // 0/0
    // finite/0: extended-real limit by sign product (see design notes)
    return neg ? FloatValue::neg_inf() : FloatValue::pos_inf();
  }
  if (a.is_zero()) return FloatValue::zero(neg);
  Unpacked x = unpack(f, a), y = unpack(f, b);
  normalize(f, x.m, x.E);
  normalize(f, y.m, y.E);
  uint64_t num = x.m << (f.p + 4);
  uint64_t Q = num / y.m, R = num % y.m;
  return round_mag(f, neg, Q, x.E - y.E - (f.p + 4), R != 0);
}

inline FloatValue fsqrt(const FloatFormat& f, const FloatValue& a) {
  using namespace fp_detail;
  if (a.is_nan()) return a;
  if (a.cls == FpClass::PosInf) return a;
  if (a.cls == FpClass::NegInf) return FloatValue::nan();
  if (a.is_zero()) return a;  // sqrt(+-0) = +-0
  if (a.neg) return FloatValue::nan();
  Unpacked x = unpack(f, a);
  normalize(f, x.m, x.E);
  int t = f.p + 4;
  if ((x.E - t) & 1) ++t;
  uint64_t M2 = x.m << t;
  uint64_t r = isqrt64(M2);
  bool sticky = r * r != M2;
  return round_mag(f, false, r, (x.E - t) / 2, sticky);
}

enum class ArithOp { add, sub, mul, div };

inline FloatValue arith(const FloatFormat& f, ArithOp op, const FloatValue& a, const FloatValue& b) {
  switch (op) {
    case ArithOp::add: return fadd(f, a, b);
    case ArithOp::sub: return fsub(f, a, b);
    case ArithOp::mul: return fmul(f, a, b);
    case ArithOp::div: return fdiv(f, a, b);
  }
  return FloatValue::nan();
}

// ---------------------------------------------------------------------------
// ordered multiset sum
// ---------------------------------------------------------------------------

// One multiset entry: a value with a multiplicity.
struct FloatEntry {
  FloatValue value;
  long long count = 1;
};

// SUM_F: fold in increasing order; -0 precedes +0. Stationary blocks are
// shortcut, so huge multiplicities cost O(1) once the fold stops moving.
inline FloatValue sum_increasing(const FloatFormat& f, std::vector<FloatEntry> entries) {
  long long total = 0;
  for (auto& e : entries) {
    if (e.count < 0) throw std::invalid_argument("sum_increasing: negative count");
    total += e.count;
    if (e.value.is_nan()) return FloatValue::nan();
  }
  if (total == 0) throw std::invalid_argument("sum_increasing: empty multiset");
  std::sort(entries.begin(), entries.end(), [&](const FloatEntry& x, const FloatEntry& y) {
    int c = compare_values(f, x.value, y.value);
    if (c != 0) return c < 0;
    return x.value.neg && !y.value.neg;
  });
  bool started = false;
  FloatValue acc;
  for (auto& e : entries) {
    if (e.count == 0) continue;
    long long n = e.count;
    if (!started) {
      acc = e.value;
      started = true;
      --n;
    }
    for (long long i = 0; i < n; ++i) {
      FloatValue next = fadd(f, acc, e.value);
      if (next == acc) break;  // adding this value is now inert
      acc = next;
      if (acc.is_nan()) return acc;
    }
  }
  return acc;
}

inline FloatValue sum_increasing(const FloatFormat& f, const std::vector<FloatValue>& vals) {
  std::vector<FloatEntry> entries;
  entries.reserve(vals.size());
  for (auto& v : vals) entries.push_back({v, 1});
  return sum_increasing(f, entries);
}

// ---------------------------------------------------------------------------
// exp
// ---------------------------------------------------------------------------

namespace fp_detail {

inline mpq_class mpfr_to_mpq(mpfr_t x) {
  mpz_class z;
  mpfr_exp_t e = mpfr_get_z_2exp(z.get_mpz_t(), x);
  mpq_class q(z);
  if (e >= 0)
    mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), (unsigned long)e);
  else
    mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), (unsigned long)(-e));
  return q;
}

// Decide exp(x) >= bound exactly, for rational x != 0 and rational bound > 0.
// exp(x) is irrational for rational x != 0, so interval refinement terminates.
inline bool exp_ge(const mpq_class& x, const mpq_class& bound) {
  for (mpfr_prec_t prec = 128; prec <= 1u << 16; prec *= 2) {
    mpfr_t lo, hi, xlo, xhi;
    mpfr_init2(lo, prec);
    mpfr_init2(hi, prec);
    mpfr_init2(xlo, prec);
    mpfr_init2(xhi, prec);
    mpfr_set_q(xlo, x.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(xhi, x.get_mpq_t(), MPFR_RNDU);
    mpfr_exp(lo, xlo, MPFR_RNDD);
    mpfr_exp(hi, xhi, MPFR_RNDU);
    bool lo_ge = mpfr_cmp_q(lo, bound.get_mpq_t()) >= 0;
    bool hi_lt = mpfr_cmp_q(hi, bound.get_mpq_t()) < 0;
    mpfr_clears(lo, hi, xlo, xhi, (mpfr_ptr)0);
    if (lo_ge) return true;
    if (hi_lt) return false;
  }
  throw std::runtime_error("exp_ge: precision exhausted");
}

struct ExpTables {
  FloatValue t_over;                   // smallest x: exact exp(x) rounds to inf
  std::optional<FloatValue> t_under;   // largest x<0: exact exp(x) rounds to 0
  std::optional<FloatValue> one_lo, one_hi;  // largest window with round(exp(x)) = 1
  FloatValue ln2;
  std::vector<FloatValue> coeffs;      // round(1/i!), i = 0..degree
};

inline const int kExpPolyDegree = 6;

inline const ExpTables& exp_tables(const FloatFormat& f) {
  static std::map<std::pair<int, int>, ExpTables> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(f.p, f.q);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  ExpTables t;
  std::vector<FloatValue> all = enumerate_finite(f);
  std::vector<FloatValue> pos, negs;
  for (auto& v : all) {
    if (v.is_zero()) continue;
    (v.neg ? negs : pos).push_back(v);
  }
  // pos ascending; negs ascending (most negative first)
  mpq_class vmax = decode(f, max_finite(f)).to_mpq();
  mpq_class step_top = Rat(1).mul_pow2((long)(f.emax_field() + f.unit_exp())).to_mpq();
  mpq_class over_mid = vmax + step_top / 2;
  {
    // binary search: smallest positive x with exp(x) >= over_mid
    size_t lo = 0, hi = pos.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (exp_ge(decode(f, pos[mid]).to_mpq(), over_mid))
        hi = mid;
      else
        lo = mid + 1;
    }
    t.t_over = lo < pos.size() ? pos[lo] : FloatValue::pos_inf();
  }
  {
    // largest negative x with exp(x) <= f_min/2; the property holds on a
    // prefix of negs (ascending from -max)
    mpq_class under_mid = decode(f, min_pos(f)).to_mpq() / 2;
    size_t lo = 0, hi = negs.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (!exp_ge(decode(f, negs[mid]).to_mpq(), under_mid))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo > 0) t.t_under = negs[lo - 1];
  }
  {
    // round(exp(x)) = 1 iff exp(x) in [1 - 2^-(p+1), 1 + 2^-p]
    mpq_class lo_bound = mpq_class(1) - Rat(1).mul_pow2(-(long)(f.p + 1)).to_mpq();
    mpq_class hi_bound = mpq_class(1) + Rat(1).mul_pow2(-(long)f.p).to_mpq();
    // largest positive x with exp(x) <= hi_bound
    size_t cnt = 0;
    for (size_t i = 0; i < pos.size(); ++i) {
      if (!exp_ge(decode(f, pos[i]).to_mpq(), hi_bound))
        cnt = i + 1;
      else
        break;
    }
    if (cnt > 0) t.one_hi = pos[cnt - 1];
    // smallest (closest to zero) negative x with exp(x) >= lo_bound: negs are
    // ascending, the property holds on a suffix
    size_t first_ok = negs.size();
    for (size_t i = negs.size(); i-- > 0;) {
      if (exp_ge(decode(f, negs[i]).to_mpq(), lo_bound))
        first_ok = i;
      else
        break;
    }
    if (first_ok < negs.size()) t.one_lo = negs[first_ok];
  }
  {
    mpfr_t l2lo, l2hi;
    mpfr_init2(l2lo, 192);
    mpfr_init2(l2hi, 192);
    mpfr_const_log2(l2lo, MPFR_RNDD);
    mpfr_const_log2(l2hi, MPFR_RNDU);
    FloatValue rlo = round_rat(f, Rat(mpfr_to_mpq(l2lo)));
    FloatValue rhi = round_rat(f, Rat(mpfr_to_mpq(l2hi)));
    mpfr_clears(l2lo, l2hi, (mpfr_ptr)0);
    if (!(rlo == rhi)) throw std::runtime_error("exp_tables: ln2 rounding ambiguous");
    t.ln2 = rlo;
  }
  {
    mpz_class fact(1);
    for (int i = 0; i <= kExpPolyDegree; ++i) {
      if (i > 0) fact *= i;
      t.coeffs.push_back(round_rat(f, Rat(mpq_class(1, fact))));
    }
  }
  return cache.emplace(key, std::move(t)).first->second;
}

}  // namespace fp_detail

// value * 2^k with a single rounding
inline FloatValue scale_pow2(const FloatFormat& f, const FloatValue& v, long long k) {
  if (!v.is_finite() || v.is_zero()) return v;
  auto u = fp_detail::unpack(f, v);
  return round_mag(f, u.neg, u.m, u.E + k, false);
}

// Four-step exp: exception screens, range reduction by ln 2, fixed Taylor
// polynomial via Horner, recombination with 2^k. All in format arithmetic.
inline FloatValue fexp(const FloatFormat& f, const FloatValue& x) {
  if (x.is_nan()) return x;
  if (x.cls == FpClass::PosInf) return x;
  if (x.cls == FpClass::NegInf) return FloatValue::zero(false);
  const auto& t = fp_detail::exp_tables(f);
  if (t.t_over.is_finite() && compare_values(f, x, t.t_over) >= 0) return FloatValue::pos_inf();
  if (t.t_under && compare_values(f, x, *t.t_under) <= 0) return FloatValue::zero(false);
  bool near_one = true;
  if (x.neg && !x.is_zero())
    near_one = t.one_lo && compare_values(f, x, *t.one_lo) >= 0;
  else if (!x.is_zero())
    near_one = t.one_hi && compare_values(f, x, *t.one_hi) <= 0;
  if (near_one) return one_value(f);

  FloatValue kf = fdiv(f, x, t.ln2);
  Rat kr = decode(f, kf).floor();
  long long k = kr.num_int64();
  FloatValue kfl = round_rat(f, kr);
  FloatValue r = fsub(f, x, fmul(f, kfl, t.ln2));
  FloatValue acc = t.coeffs[fp_detail::kExpPolyDegree];
  for (int i = fp_detail::kExpPolyDegree - 1; i >= 0; --i)
    acc = fadd(f, fmul(f, acc, r), t.coeffs[i]);
  return scale_pow2(f, acc, k);
}

// ---------------------------------------------------------------------------
// attention row functions over multiset-typed rows
// ---------------------------------------------------------------------------

enum class AhMode { sum_denominator, direct_round };

// softmax over a row given as distinct entries with multiplicities; the
// result is per distinct entry. Order of operations: bias by the max, exp,
// SUM_F denominator, then division.
inline std::vector<FloatValue> softmax_row_typed(const FloatFormat& f,
                                                 const std::vector<FloatEntry>& row) {
  if (row.empty()) throw std::invalid_argument("softmax_row: empty");
  for (auto& e : row)
    if (e.value.is_nan()) return std::vector<FloatValue>(row.size(), FloatValue::nan());
  const FloatValue* b = &row[0].value;
  for (auto& e : row)
    if (compare_values(f, e.value, *b) > 0) b = &e.value;
  std::vector<FloatValue> exps(row.size());
  for (size_t i = 0; i < row.size(); ++i) exps[i] = fexp(f, fsub(f, row[i].value, *b));
  std::vector<FloatEntry> ments(row.size());
  for (size_t i = 0; i < row.size(); ++i) ments[i] = {exps[i], row[i].count};
  FloatValue denom = sum_increasing(f, ments);
  std::vector<FloatValue> out(row.size());
  for (size_t i = 0; i < row.size(); ++i) out[i] = fdiv(f, exps[i], denom);
  return out;
}

inline std::vector<FloatValue> ah_row_typed(const FloatFormat& f,
                                            const std::vector<FloatEntry>& row, AhMode mode) {
  if (row.empty()) throw std::invalid_argument("ah_row: empty");
  for (auto& e : row)
    if (e.value.is_nan()) return std::vector<FloatValue>(row.size(), FloatValue::nan());
  const FloatValue* b = &row[0].value;
  for (auto& e : row)
    if (compare_values(f, e.value, *b) > 0) b = &e.value;
  long long sz = 0;
  std::vector<bool> is_max(row.size());
  for (size_t i = 0; i < row.size(); ++i) {
    is_max[i] = compare_values(f, row[i].value, *b) == 0;
    if (is_max[i]) sz += row[i].count;
  }
  FloatValue denom;
  if (mode == AhMode::sum_denominator) {
    denom = sum_increasing(f, std::vector<FloatEntry>{{one_value(f), sz}});
  } else {
    denom = round_rat(f, Rat((long long)sz));
    if (denom.is_inf()) denom = max_finite(f);
  }
  std::vector<FloatValue> out(row.size());
  FloatValue share = fdiv(f, one_value(f), denom);
  for (size_t i = 0; i < row.size(); ++i) out[i] = is_max[i] ? share : FloatValue::zero(false);
  return out;
}

inline std::vector<FloatValue> softmax_row(const FloatFormat& f, const std::vector<FloatValue>& x) {
  std::vector<FloatEntry> row;
  for (auto& v : x) row.push_back({v, 1});
  return softmax_row_typed(f, row);
}

inline std::vector<FloatValue> ah_row(const FloatFormat& f, const std::vector<FloatValue>& x,
                                      AhMode mode = AhMode::sum_denominator) {
  std::vector<FloatEntry> row;
  for (auto& v : x) row.push_back({v, 1});
  return ah_row_typed(f, row, mode);
}

// 1 at the least index attaining the maximum, 0 elsewhere.
template <typename V, typename Cmp>
std::vector<int> uh_row_generic(const std::vector<V>& x, Cmp less) {
  if (x.empty()) throw std::invalid_argument("uh_row: empty");
  size_t best = 0;
  for (size_t i = 1; i < x.size(); ++i)
    if (less(x[best], x[i])) best = i;
  std::vector<int> out(x.size(), 0);
  out[best] = 1;
  return out;
}

inline std::vector<int> uh_row(const FloatFormat& f, const std::vector<FloatValue>& x) {
  for (auto& v : x)
    if (v.is_nan()) throw std::invalid_argument("uh_row: NaN input");
  return uh_row_generic(x, [&](const FloatValue& a, const FloatValue& b) {
    return compare_values(f, a, b) < 0;
  });
}

// ---------------------------------------------------------------------------
// format analyzers
// ---------------------------------------------------------------------------

struct SaturationInfo {
  FloatFormat format;
  long long threshold = 0;       // minimal k with SUM(M) = SUM(M_|k) for all M
  FloatValue witness_value;      // value whose block realizes the threshold
  FloatValue witness_prefix;     // prefix element (s0) of the witness, or the value itself
  bool witness_is_pure_block = false;
};

namespace fp_detail {

// number of effective additions of v starting from state s before the fold
// becomes stationary; fold values are format values so this is a walk in a
// functional graph without cycles (the fold is monotone).
inline long long steps_to_fix(const FloatFormat& f, const FloatValue& v, const FloatValue& s0) {
  FloatValue s = s0;
  long long steps = 0;
  while (true) {
    FloatValue nxt = fadd(f, s, v);
    if (nxt == s) return steps;
    s = nxt;
    ++steps;
    if (steps > (1LL << 22)) throw std::runtime_error("steps_to_fix: runaway fold");
  }
}

}  // namespace fp_detail

inline SaturationInfo saturation_threshold(const FloatFormat& f) {
  if (f.finite_count() > (1 << 16))
    throw std::domain_error("saturation_threshold: threshold search infeasible");
  std::vector<FloatValue> vals = enumerate_finite(f);
  SaturationInfo info;
  info.format = f;
  info.threshold = 1;
  for (const auto& v : vals) {
    if (v.is_zero()) continue;
    // pure block {v x n}: stationary from steps(v)+1 copies
    long long kb = fp_detail::steps_to_fix(f, v, v) + 1;
    if (kb > info.threshold) {
      info.threshold = kb;
      info.witness_value = v;
      info.witness_prefix = v;
      info.witness_is_pure_block = true;
    }
    // prefix {s0} then {v x n}: needs steps(s0) copies; s0 must sort before v
    for (const auto& s0 : vals) {
      if (compare_values(f, s0, v) >= 0) break;  // vals ascending
      long long ks = fp_detail::steps_to_fix(f, v, s0);
      if (ks > info.threshold) {
        info.threshold = ks;
        info.witness_value = v;
        info.witness_prefix = s0;
        info.witness_is_pure_block = false;
      }
    }
  }
  return info;
}

// Largest-magnitude nonzero F (returned positive) with F' * f = 0 for all
// |F'| <= F; exists for every |f| <= 1/2.
inline FloatValue underflow_bound(const FloatFormat& fmt, const FloatValue& f) {
  if (!f.is_finite()) throw std::domain_error("underflow_bound: f must be finite");
  if (cmp(decode(fmt, f).abs(), Rat(1, 2)) > 0)
    throw std::domain_error("underflow_bound: |f| > 1/2");
  if (f.is_zero()) return max_finite(fmt);
  std::vector<FloatValue> pos;
  for (auto& v : enumerate_finite(fmt))
    if (!v.neg && !v.is_zero()) pos.push_back(v);
  // predicate monotone: once a product is nonzero, larger F' stay nonzero
  size_t lo = 0, hi = pos.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (fmul(fmt, pos[mid], f).is_zero())
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo == 0) throw std::runtime_error("underflow_bound: no zero product");
  return pos[lo - 1];
}

// Smallest format in a fixed search schedule representing every integer in
// [K] exactly and rounding 1/k to pairwise distinct values. The schedule
// starts at the default desk format F(6,5).
inline FloatFormat choose_format(long long K) {
  if (K < 1) throw std::invalid_argument("choose_format: K >= 1 required");
  for (int step = 0;; ++step) {
    FloatFormat f{6 + step, 5 + step / 3};
    f.validate();
    bool ok = true;
    std::vector<FloatValue> recips;
    for (long long k = 1; k <= K && ok; ++k) {
      FloatValue kv = round_rat(f, Rat(k));
      if (!kv.is_finite() || !(decode(f, kv) == Rat(k))) ok = false;
      recips.push_back(round_rat(f, Rat(1, k)));
    }
    for (size_t i = 0; ok && i < recips.size(); ++i)
      for (size_t j = i + 1; ok && j < recips.size(); ++j)
        if (compare_values(f, recips[i], recips[j]) == 0) ok = false;
    if (ok) return f;
    if (step > 64) throw std::runtime_error("choose_format: schedule exhausted");
  }
}

}  // namespace gtlogic
