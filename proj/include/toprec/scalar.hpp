// Exact scalars for the recursion engine: elements a + b*w of Q(w) with
// w^2 + w + 1 = 0 (w a primitive cube root of unity).  Plain rationals are the
// b = 0 slice.  All arithmetic reduces modulo the minimal polynomial, so w^2
// is always rewritten as -1 - w and every value has a unique coordinate form.
#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace toprec {

using Rat = mpq_class;

// Parse "p", "-p", or "p/q" into an exact rational.
inline Rat parse_rat(const std::string& text) {
  Rat r;
  if (r.set_str(text, 10) != 0)
    throw std::invalid_argument("not a rational literal: '" + text + "'");
  r.canonicalize();
  return r;
}

class Scalar {
 public:
  Scalar() : a_(0), b_(0) {}
  Scalar(int v) : a_(v), b_(0) {}            // NOLINT: implicit by design
  Scalar(long v) : a_(long(v)), b_(0) {}     // NOLINT
  Scalar(const Rat& v) : a_(v), b_(0) {}     // NOLINT
  Scalar(Rat a, Rat b) : a_(std::move(a)), b_(std::move(b)) {}

  static Scalar zero() { return Scalar(); }
  static Scalar one() { return Scalar(1); }
  // The canonical primitive cube root of unity.
  static Scalar theta() { return Scalar(Rat(0), Rat(1)); }

  const Rat& a() const { return a_; }
  const Rat& b() const { return b_; }

  bool is_zero() const { return a_ == 0 && b_ == 0; }
  bool is_one() const { return a_ == 1 && b_ == 0; }
  bool is_rational() const { return b_ == 0; }

  Scalar operator-() const { return Scalar(-a_, -b_); }

  Scalar& operator+=(const Scalar& o) {
    a_ += o.a_;
    b_ += o.b_;
    return *this;
  }
  Scalar& operator-=(const Scalar& o) {
    a_ -= o.a_;
    b_ -= o.b_;
    return *this;
  }
  // (a + b w)(c + d w) = ac + (ad + bc) w + bd w^2,  w^2 = -1 - w
  //                    = (ac - bd) + (ad + bc - bd) w.
  Scalar& operator*=(const Scalar& o) {
    Rat bd = b_ * o.b_;
    Rat na = a_ * o.a_ - bd;
    Rat nb = a_ * o.b_ + b_ * o.a_ - bd;
    a_ = std::move(na);
    b_ = std::move(nb);
    return *this;
  }

  // Conjugate swaps w -> w^2: conj(a + b w) = (a - b) - b w, and
  // x * conj(x) = a^2 - a b + b^2 is the (rational, nonnegative) norm.
  Scalar conj() const { return Scalar(a_ - b_, -b_); }
  Rat norm() const { return a_ * a_ - a_ * b_ + b_ * b_; }

  Scalar inverse() const {
    if (is_zero()) throw std::domain_error("division by zero scalar");
    Rat n = norm();
    return Scalar((a_ - b_) / n, -b_ / n);
  }

  Scalar& operator/=(const Scalar& o) { return *this *= o.inverse(); }

  friend Scalar operator+(Scalar l, const Scalar& r) { return l += r; }
  friend Scalar operator-(Scalar l, const Scalar& r) { return l -= r; }
  friend Scalar operator*(Scalar l, const Scalar& r) { return l *= r; }
  friend Scalar operator/(Scalar l, const Scalar& r) { return l /= r; }

  friend bool operator==(const Scalar& l, const Scalar& r) {
    return l.a_ == r.a_ && l.b_ == r.b_;
  }
  friend bool operator!=(const Scalar& l, const Scalar& r) { return !(l == r); }
  // Arbitrary but total order, so scalars can key std::map.
  friend bool operator<(const Scalar& l, const Scalar& r) {
    int c = cmp(l.a_, r.a_);
    if (c != 0) return c < 0;
    return cmp(l.b_, r.b_) < 0;
  }

  Scalar pow(long e) const {
    if (e < 0) return inverse().pow(-e);
    Scalar acc = one(), base = *this;
    for (; e > 0; e >>= 1) {
      if (e & 1) acc *= base;
      if (e > 1) base *= base;
    }
    return acc;
  }

  // If this scalar is a perfect square in Q(w), return a square root.
  // Used by the branch-point solver for in-field quadratics.
  std::optional<Scalar> sqrt_in_field() const;

  std::string str() const {
    if (b_ == 0) return a_.get_str();
    std::string out;
    if (a_ != 0) out += a_.get_str();
    if (b_ > 0 && !out.empty()) out += "+";
    if (b_ == -1)
      out += "-";
    else if (b_ != 1)
      out += b_.get_str() + "*";
    out += "w";
    return out;
  }

 private:
  Rat a_, b_;
};

// Square root of a rational if it is a perfect square.
inline std::optional<Rat> rat_sqrt(const Rat& r) {
  if (r < 0) return std::nullopt;
  mpz_class num = r.get_num(), den = r.get_den();
  if (mpz_perfect_square_p(num.get_mpz_t()) == 0) return std::nullopt;
  if (mpz_perfect_square_p(den.get_mpz_t()) == 0) return std::nullopt;
  mpz_class sn, sd;
  mpz_sqrt(sn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(sd.get_mpz_t(), den.get_mpz_t());
  return Rat(sn, sd);
}

// Solve (u + v w)^2 = a + b w over Q.  Expanding with w^2 = -1 - w gives
//   u^2 - v^2 = a,   2uv - v^2 = b.
// v = 0 needs a square rational a; u = 0 needs (a, b) = (-v^2, -v^2) and is
// covered by the same equations; the generic case reduces to a rational
// quadratic in v^2.
inline std::optional<Scalar> Scalar::sqrt_in_field() const {
  if (is_zero()) return Scalar::zero();
  if (b_ == 0) {
    if (auto u = rat_sqrt(a_)) return Scalar(*u);
    // a < 0: try purely "imaginary" roots (u + v w with 2uv = v^2, u = v/2):
    // (v/2 + v w)^2 = v^2(1/4 + 1 w + w^2) = v^2(-3/4) => need a = -3 v^2/4.
    if (auto v = rat_sqrt(a_ / Rat(-3, 4))) return Scalar(*v / 2, *v);
    return std::nullopt;
  }
  // b != 0: from 2uv - v^2 = b, v != 0 and u = (b + v^2)/(2v).  Substituting
  // into u^2 - v^2 = a yields (with s = v^2) a quadratic:
  //   (b + s)^2 = 4 s (a + s)  =>  3 s^2 + (4a - 2b) s - b^2 = 0.
  Rat A(3), B = Rat(4) * a_ - Rat(2) * b_, C = -b_ * b_;
  Rat disc = B * B - Rat(4) * A * C;
  auto sq = rat_sqrt(disc);
  if (!sq) return std::nullopt;
  for (int sign : {+1, -1}) {
    Rat s = (-B + Rat(sign) * *sq) / (Rat(2) * A);
    if (s <= 0) continue;
    auto v = rat_sqrt(s);
    if (!v || *v == 0) continue;
    Rat u = (b_ + s) / (Rat(2) * *v);
    Scalar cand(u, *v);
    if (cand * cand == *this) return cand;
  }
  return std::nullopt;
}

}  // namespace toprec
