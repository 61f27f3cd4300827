#pragma once

#include <cstdint>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace gtlogic {

// Exact extended-real scalar: an arbitrary-precision rational plus +/-infinity.
// Values up to 64-bit numerator/denominator stay in an inline fast path and
// promote to GMP rationals only on overflow, so networks whose weights are
// small integers and fractions never touch the heap.
class Rat {
public:
  Rat() : kind_(Kind::Small), n_(0), d_(1) {}
  Rat(long long n) : kind_(Kind::Small), n_(n), d_(1) {}
  Rat(long long n, long long d) : kind_(Kind::Small), n_(n), d_(d) {
    if (d == 0) throw std::invalid_argument("Rat: zero denominator");
    normalize_small();
  }
  explicit Rat(const mpq_class& q) { assign_big(q); }

  static Rat pos_inf() { Rat r; r.kind_ = Kind::PosInf; return r; }
  static Rat neg_inf() { Rat r; r.kind_ = Kind::NegInf; return r; }

  static Rat from_string(const std::string& s) {
    if (s == "inf" || s == "+inf") return pos_inf();
    if (s == "-inf") return neg_inf();
    auto slash = s.find('/');
    mpq_class q;
    if (slash == std::string::npos)
      q = mpq_class(mpz_class(s));
    else
      q = mpq_class(mpz_class(s.substr(0, slash)), mpz_class(s.substr(slash + 1)));
    q.canonicalize();
    Rat r;
    r.assign_big(q);
    return r;
  }

  bool is_finite() const { return kind_ == Kind::Small || kind_ == Kind::Big; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  bool is_zero() const { return kind_ == Kind::Small && n_ == 0; }

  // -1, 0, +1
  int sgn() const {
    switch (kind_) {
      case Kind::Small: return n_ > 0 ? 1 : n_ < 0 ? -1 : 0;
      case Kind::Big: return ::sgn(*big_);
      case Kind::PosInf: return 1;
      case Kind::NegInf: return -1;
    }
    return 0;
  }

  Rat operator-() const {
    switch (kind_) {
      case Kind::PosInf: return neg_inf();
      case Kind::NegInf: return pos_inf();
      case Kind::Small: {
        Rat r = *this;
        r.n_ = -r.n_;
        return r;
      }
      case Kind::Big: {
        Rat r;
        r.assign_big(mpq_class(-*big_));
        return r;
      }
    }
    return Rat();
  }

  friend Rat operator+(const Rat& a, const Rat& b) {
    if (!a.is_finite() || !b.is_finite()) {
      if (a.is_finite()) return b;
      if (b.is_finite()) return a;
      if (a.kind_ == b.kind_) return a;
      throw std::domain_error("Rat: inf + -inf");
    }
    if (a.kind_ == Kind::Small && b.kind_ == Kind::Small) {
      I128 n = (I128)a.n_ * b.d_ + (I128)b.n_ * a.d_;
      I128 d = (I128)a.d_ * b.d_;
      Rat r;
      if (r.try_small(n, d)) return r;
    }
    Rat r;
    r.assign_big(a.to_mpq() + b.to_mpq());
    return r;
  }

  friend Rat operator-(const Rat& a, const Rat& b) { return a + (-b); }

  friend Rat operator*(const Rat& a, const Rat& b) {
    if (!a.is_finite() || !b.is_finite()) {
      if (a.is_zero() || b.is_zero()) throw std::domain_error("Rat: 0 * inf");
      int s = a.sgn() * b.sgn();
      return s > 0 ? pos_inf() : neg_inf();
    }
    if (a.kind_ == Kind::Small && b.kind_ == Kind::Small) {
      I128 n = (I128)a.n_ * b.n_;
      I128 d = (I128)a.d_ * b.d_;
      Rat r;
      if (r.try_small(n, d)) return r;
    }
    Rat r;
    r.assign_big(a.to_mpq() * b.to_mpq());
    return r;
  }

  friend Rat operator/(const Rat& a, const Rat& b) {
    if (!a.is_finite() && !b.is_finite()) throw std::domain_error("Rat: inf / inf");
    if (!b.is_finite()) return Rat(0);
    if (b.is_zero()) {
      if (a.is_zero()) throw std::domain_error("Rat: 0 / 0");
      return a.sgn() > 0 ? pos_inf() : neg_inf();
    }
    if (!a.is_finite()) return a.sgn() * b.sgn() > 0 ? pos_inf() : neg_inf();
    if (a.kind_ == Kind::Small && b.kind_ == Kind::Small) {
      I128 n = (I128)a.n_ * b.d_;
      I128 d = (I128)a.d_ * b.n_;
      if (d < 0) { n = -n; d = -d; }
      Rat r;
      if (r.try_small(n, d)) return r;
    }
    Rat r;
    r.assign_big(a.to_mpq() / b.to_mpq());
    return r;
  }

  friend int cmp(const Rat& a, const Rat& b) {
    if (a.kind_ == Kind::NegInf) return b.kind_ == Kind::NegInf ? 0 : -1;
    if (a.kind_ == Kind::PosInf) return b.kind_ == Kind::PosInf ? 0 : 1;
    if (b.kind_ == Kind::NegInf) return 1;
    if (b.kind_ == Kind::PosInf) return -1;
    if (a.kind_ == Kind::Small && b.kind_ == Kind::Small) {
      I128 l = (I128)a.n_ * b.d_, r = (I128)b.n_ * a.d_;
      return l < r ? -1 : l > r ? 1 : 0;
    }
    return ::cmp(a.to_mpq(), b.to_mpq());
  }
  friend bool operator==(const Rat& a, const Rat& b) {
    if (a.kind_ != b.kind_ && (!a.is_finite() || !b.is_finite())) return false;
    return cmp(a, b) == 0;
  }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) { return cmp(a, b) < 0; }
  friend bool operator<=(const Rat& a, const Rat& b) { return cmp(a, b) <= 0; }
  friend bool operator>(const Rat& a, const Rat& b) { return cmp(a, b) > 0; }
  friend bool operator>=(const Rat& a, const Rat& b) { return cmp(a, b) >= 0; }

  Rat abs() const { return sgn() < 0 ? -*this : *this; }

  // Largest integer <= value. Finite only.
  Rat floor() const {
    require_finite("floor");
    if (kind_ == Kind::Small) {
      long long q = n_ / d_;
      if (n_ % d_ != 0 && n_ < 0) --q;
      return Rat(q);
    }
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), big_->get_num().get_mpz_t(), big_->get_den().get_mpz_t());
    Rat r;
    r.assign_big(mpq_class(q));
    return r;
  }

  bool is_integer() const {
    if (kind_ == Kind::Small) return d_ == 1;
    if (kind_ == Kind::Big) return big_->get_den() == 1;
    return false;
  }

  // Exact square root; throws unless the value is a perfect rational square.
  Rat sqrt_exact() const {
    if (is_pos_inf()) return *this;
    require_finite("sqrt");
    if (sgn() < 0) throw std::domain_error("Rat: sqrt of negative");
    mpq_class q = to_mpq();
    mpz_class sn, sd, rn, rd;
    mpz_sqrtrem(sn.get_mpz_t(), rn.get_mpz_t(), q.get_num().get_mpz_t());
    mpz_sqrtrem(sd.get_mpz_t(), rd.get_mpz_t(), q.get_den().get_mpz_t());
    if (rn != 0 || rd != 0) throw std::domain_error("Rat: sqrt is irrational");
    Rat r;
    r.assign_big(mpq_class(sn, sd));
    return r;
  }

  // value * 2^k, exact.
  Rat mul_pow2(long k) const {
    if (!is_finite()) return *this;
    mpq_class q = to_mpq();
    if (k >= 0)
      mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), (unsigned long)k);
    else
      mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), (unsigned long)(-k));
    Rat r;
    r.assign_big(q);
    return r;
  }

  mpq_class to_mpq() const {
    require_finite("to_mpq");
    if (kind_ == Kind::Big) return *big_;
    return mpq_class(mpz_class((long)n_), mpz_class((long)d_));
  }

  double to_double() const {
    switch (kind_) {
      case Kind::Small: return (double)n_ / (double)d_;
      case Kind::Big: return big_->get_d();
      case Kind::PosInf: return std::numeric_limits<double>::infinity();
      case Kind::NegInf: return -std::numeric_limits<double>::infinity();
    }
    return 0;
  }

  long long num_int64() const {
    if (kind_ != Kind::Small) throw std::domain_error("Rat: not small");
    return n_;
  }
  long long den_int64() const {
    if (kind_ != Kind::Small) throw std::domain_error("Rat: not small");
    return d_;
  }

  std::string to_string() const {
    switch (kind_) {
      case Kind::PosInf: return "inf";
      case Kind::NegInf: return "-inf";
      case Kind::Small: return std::to_string(n_) + "/" + std::to_string(d_);
      case Kind::Big: {
        mpq_class q = *big_;
        return q.get_num().get_str() + "/" + q.get_den().get_str();
      }
    }
    return "";
  }

private:
  enum class Kind : uint8_t { Small, Big, PosInf, NegInf };
  using I128 = __int128;

  void require_finite(const char* op) const {
    if (!is_finite()) throw std::domain_error(std::string("Rat: ") + op + " on infinity");
  }

  void normalize_small() {
    if (d_ < 0) { n_ = -n_; d_ = -d_; }
    long long g = std::gcd(n_ < 0 ? -n_ : n_, d_);
    if (g > 1) { n_ /= g; d_ /= g; }
  }

  static I128 iabs128(I128 v) { return v < 0 ? -v : v; }

  static I128 gcd128(I128 a, I128 b) {
    a = iabs128(a);
    b = iabs128(b);
    while (b != 0) {
      I128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  bool try_small(I128 n, I128 d) {
    I128 g = gcd128(n, d);
    if (g > 1) { n /= g; d /= g; }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) return false;
    kind_ = Kind::Small;
    n_ = (long long)n;
    d_ = (long long)d;
    big_.reset();
    return true;
  }

  void assign_big(const mpq_class& q) {
    mpq_class c = q;
    c.canonicalize();
    if (c.get_num().fits_slong_p() && c.get_den().fits_slong_p()) {
      kind_ = Kind::Small;
      n_ = c.get_num().get_si();
      d_ = c.get_den().get_si();
      big_.reset();
    } else {
      kind_ = Kind::Big;
      big_ = std::make_shared<const mpq_class>(c);
    }
  }

  Kind kind_;
  long long n_, d_;
  std::shared_ptr<const mpq_class> big_;
};

}  // namespace gtlogic
