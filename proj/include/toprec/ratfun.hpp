// Rational functions in one symbol over a field K, kept in a canonical form
// (numerator/denominator coprime, no common symbol power, monic denominator)
// so equality is plain coordinate comparison and agrees with cross
// multiplication.  K = Scalar gives the curve-level functions; nesting
// RationalFunction<RationalFunction<Scalar>> gives exact bivariate identities.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "toprec/polynomial.hpp"
#include "toprec/scalar.hpp"

namespace toprec {

template <class K>
class RationalFunction {
 public:
  using Poly = Polynomial<K>;

  RationalFunction() : num_(Poly::zero()), den_(Poly::one()) {}
  RationalFunction(int v) : num_(K(v)), den_(Poly::one()) {}  // NOLINT
  RationalFunction(K v) : num_(std::move(v)), den_(Poly::one()) {}  // NOLINT
  RationalFunction(Poly p) : num_(std::move(p)), den_(Poly::one()) {  // NOLINT
    normalize();
  }
  RationalFunction(Poly n, Poly d) : num_(std::move(n)), den_(std::move(d)) {
    if (den_.is_zero()) throw std::domain_error("zero denominator");
    normalize();
  }

  static RationalFunction symbol() { return RationalFunction(Poly::monomial(1)); }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  bool is_zero() const { return num_.is_zero(); }
  bool is_one() const { return num_ == Poly::one() && den_ == Poly::one(); }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
  K constant() const {
    if (!is_constant()) throw std::domain_error("not a constant");
    return num_.is_zero() ? K(0) : num_.coeff(0);
  }

  RationalFunction operator-() const {
    RationalFunction r = *this;
    r.num_ = -r.num_;
    return r;
  }

  friend RationalFunction operator+(const RationalFunction& l,
                                    const RationalFunction& r) {
    return RationalFunction(l.num_ * r.den_ + r.num_ * l.den_, l.den_ * r.den_);
  }
  friend RationalFunction operator-(const RationalFunction& l,
                                    const RationalFunction& r) {
    return RationalFunction(l.num_ * r.den_ - r.num_ * l.den_, l.den_ * r.den_);
  }
  friend RationalFunction operator*(const RationalFunction& l,
                                    const RationalFunction& r) {
    return RationalFunction(l.num_ * r.num_, l.den_ * r.den_);
  }
  friend RationalFunction operator/(const RationalFunction& l,
                                    const RationalFunction& r) {
    if (r.is_zero()) throw std::domain_error("division by zero function");
    return RationalFunction(l.num_ * r.den_, l.den_ * r.num_);
  }
  RationalFunction& operator+=(const RationalFunction& o) { return *this = *this + o; }
  RationalFunction& operator-=(const RationalFunction& o) { return *this = *this - o; }
  RationalFunction& operator*=(const RationalFunction& o) { return *this = *this * o; }
  RationalFunction& operator/=(const RationalFunction& o) { return *this = *this / o; }

  RationalFunction inverse() const {
    if (is_zero()) throw std::domain_error("inverse of zero function");
    return RationalFunction(den_, num_);
  }

  friend bool operator==(const RationalFunction& l, const RationalFunction& r) {
    return l.num_ == r.num_ && l.den_ == r.den_;
  }
  friend bool operator!=(const RationalFunction& l, const RationalFunction& r) {
    return !(l == r);
  }

  // (num' den - num den') / den^2, normalized.
  RationalFunction derivative() const {
    return RationalFunction(num_.derivative() * den_ - num_ * den_.derivative(),
                            den_ * den_);
  }

  // Evaluate at a field point; throws on a denominator zero.
  K eval(const K& p) const {
    K d = den_.template eval<K>(p);
    if (d.is_zero()) throw std::domain_error("evaluation at a pole");
    return num_.template eval<K>(p) * d.inverse();
  }

  // Substitute another rational function (or any field-like T with the usual
  // operations) for the symbol.
  template <class T>
  T subst(const T& g) const {
    T d = den_.template eval<T>(g);
    return num_.template eval<T>(g) * d.inverse();
  }

  // Order of vanishing at a finite point (positive = zero, negative = pole).
  // num and den are plain polynomials in canonical form, so counting
  // (z - p) divisions covers p = 0 as well.
  int order_at(const K& p) const {
    if (is_zero()) throw std::domain_error("order of the zero function");
    Poly root = Poly::monomial(1) - Poly(K(p));
    auto count = [&root](Poly q) {
      int n = 0;
      while (!q.is_zero()) {
        auto [quot, rem] = q.divmod(root);
        if (!rem.is_zero()) break;
        q = std::move(quot);
        ++n;
      }
      return n;
    };
    return count(num_) - count(den_);
  }

  std::string str(const std::string& sym) const {
    if (den_ == Poly::one()) return num_.str(sym);
    return "(" + num_.str(sym) + ") / (" + den_.str(sym) + ")";
  }
  // Default symbol, so this type can itself serve as a coefficient field.
  std::string str() const { return str("z"); }

 private:
  void normalize() {
    if (num_.is_zero()) {
      den_ = Poly::one();
      return;
    }
    // Fold any principal parts into a common symbol power, then cancel it.
    int shift = std::min({num_.val(), den_.val(), 0});
    num_ = num_.shifted(-shift);
    den_ = den_.shifted(-shift);
    int zv = std::min(num_.val(), den_.val());
    num_ = num_.shifted(-zv);
    den_ = den_.shifted(-zv);
    Poly g = poly_gcd(num_, den_);
    if (!(g == Poly::one())) {
      num_ = num_.divmod(g).first;
      den_ = den_.divmod(g).first;
    }
    K lead = den_.lead();
    if (!lead.is_one()) {
      K inv = lead.inverse();
      num_ = num_.scaled(inv);
      den_ = den_.scaled(inv);
    }
  }

  Poly num_, den_;
};

// The concrete curve-level instantiation used throughout the engine.
using RatFun = RationalFunction<Scalar>;

}  // namespace toprec
