// Dense univariate Laurent polynomials over a field K.  The coefficient list
// starts at an arbitrary (possibly negative) offset so hard-edge expressions
// like z^-2 + z/2 are first-class.  Instantiated with Scalar for curve data
// and with RationalFunction<Scalar> for exact bivariate kernel identities.
#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace toprec {

template <class K>
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(K constant) {  // NOLINT: implicit by design
    if (!constant.is_zero()) {
      off_ = 0;
      c_.push_back(std::move(constant));
    }
  }
  // Coefficients c[i] of z^{off+i}.
  Polynomial(int off, std::vector<K> coeffs) : off_(off), c_(std::move(coeffs)) {
    trim();
  }

  static Polynomial zero() { return Polynomial(); }
  static Polynomial one() { return Polynomial(K(1)); }
  static Polynomial monomial(int e, K coeff = K(1)) {
    return Polynomial(e, {std::move(coeff)});
  }

  bool is_zero() const { return c_.empty(); }
  bool is_constant() const { return c_.empty() || (off_ == 0 && c_.size() == 1); }
  // Lowest/highest exponents; only meaningful for nonzero polynomials.
  int val() const { return off_; }
  int deg() const { return off_ + int(c_.size()) - 1; }
  const std::vector<K>& coeffs() const { return c_; }

  K coeff(int e) const {
    if (e < off_ || e >= off_ + int(c_.size())) return K(0);
    return c_[e - off_];
  }

  K lead() const {
    if (is_zero()) throw std::domain_error("lead of zero polynomial");
    return c_.back();
  }

  Polynomial operator-() const {
    Polynomial r = *this;
    for (K& k : r.c_) k = -k;
    return r;
  }

  friend Polynomial operator+(const Polynomial& l, const Polynomial& r) {
    if (l.is_zero()) return r;
    if (r.is_zero()) return l;
    int off = std::min(l.off_, r.off_);
    int top = std::max(l.deg(), r.deg());
    std::vector<K> c(size_t(top - off + 1), K(0));
    for (size_t i = 0; i < l.c_.size(); ++i) c[size_t(l.off_ - off) + i] = l.c_[i];
    for (size_t i = 0; i < r.c_.size(); ++i) c[size_t(r.off_ - off) + i] += r.c_[i];
    return Polynomial(off, std::move(c));
  }
  friend Polynomial operator-(const Polynomial& l, const Polynomial& r) {
    return l + (-r);
  }
  friend Polynomial operator*(const Polynomial& l, const Polynomial& r) {
    if (l.is_zero() || r.is_zero()) return zero();
    std::vector<K> c(l.c_.size() + r.c_.size() - 1, K(0));
    for (size_t i = 0; i < l.c_.size(); ++i) {
      if (l.c_[i].is_zero()) continue;
      for (size_t j = 0; j < r.c_.size(); ++j) c[i + j] += l.c_[i] * r.c_[j];
    }
    return Polynomial(l.off_ + r.off_, std::move(c));
  }
  Polynomial& operator+=(const Polynomial& o) { return *this = *this + o; }
  Polynomial& operator-=(const Polynomial& o) { return *this = *this - o; }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  friend bool operator==(const Polynomial& l, const Polynomial& r) {
    return l.off_ == r.off_ && l.c_ == r.c_;
  }
  friend bool operator!=(const Polynomial& l, const Polynomial& r) {
    return !(l == r);
  }

  Polynomial scaled(const K& k) const {
    if (k.is_zero()) return zero();
    Polynomial r = *this;
    for (K& x : r.c_) x = x * k;
    r.trim();  // a zero divisor cannot occur over a field, but stay safe
    return r;
  }

  // d/dz, Laurent-aware: z^-1 differentiates to -z^-2 (no logs appear here;
  // primitives are a separate, checked operation).
  Polynomial derivative() const {
    if (is_zero()) return zero();
    std::vector<K> c;
    c.reserve(c_.size());
    for (size_t i = 0; i < c_.size(); ++i) c.push_back(c_[i] * K(off_ + int(i)));
    return Polynomial(off_ - 1, std::move(c));
  }

  // Multiply by z^k.
  Polynomial shifted(int k) const {
    if (is_zero()) return zero();
    Polynomial r = *this;
    r.off_ += k;
    return r;
  }

  // Evaluate at a point of any ring T supporting +, *, and (for negative
  // offsets) an inverse() member.  Horner on the nonnegative part plus a
  // mirrored Horner in 1/point for the principal part.
  template <class T>
  T eval(const T& p) const {
    if (is_zero()) return T(0);
    T acc(0);
    // exponents off_ .. deg, descending Horner
    for (size_t i = c_.size(); i-- > 0;) {
      acc = acc * p + T(c_[i]);
    }
    // acc now equals sum c_i p^i; fix the offset.
    if (off_ > 0) {
      T q = p;
      T power(1);
      int e = off_;
      for (; e > 0; e >>= 1) {
        if (e & 1) power = power * q;
        if (e > 1) q = q * q;
      }
      return acc * power;
    }
    if (off_ < 0) {
      T q = p.inverse();
      T power(1);
      int e = -off_;
      for (; e > 0; e >>= 1) {
        if (e & 1) power = power * q;
        if (e > 1) q = q * q;
      }
      return acc * power;
    }
    return acc;
  }

  // True polynomial (offset >= 0) division: *this = q*d + r with deg r < deg d.
  // Requires both operands to have no principal part.
  std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
    if (d.is_zero()) throw std::domain_error("polynomial division by zero");
    if (off_ < 0 || d.off_ < 0)
      throw std::domain_error("divmod requires plain polynomials");
    Polynomial q = zero(), r = *this;
    K dl = d.lead();
    K dli = dl.inverse();
    while (!r.is_zero() && r.deg() >= d.deg()) {
      K f = r.lead() * dli;
      int e = r.deg() - d.deg();
      Polynomial t = monomial(e, f);
      q += t;
      r -= t * d;
    }
    return {q, r};
  }

  std::string str(const std::string& sym) const {
    if (is_zero()) return "0";
    std::string out;
    for (size_t i = c_.size(); i-- > 0;) {
      const K& k = c_[i];
      if (k.is_zero()) continue;
      int e = off_ + int(i);
      std::string term = k.str();
      if (term.find_first_of("+-", 1) != std::string::npos)
        term = "(" + term + ")";
      if (e != 0) {
        if (term == "1")
          term.clear();
        else if (term == "-1")
          term = "-";
        else
          term += "*";
        term += sym;
        if (e != 1) term += "^" + std::to_string(e);
      }
      if (out.empty()) {
        out = term;
      } else if (!term.empty() && term[0] == '-') {
        out += " - " + term.substr(1);
      } else {
        out += " + " + term;
      }
    }
    return out.empty() ? "0" : out;
  }

 private:
  void trim() {
    size_t lead0 = 0;
    while (lead0 < c_.size() && c_[lead0].is_zero()) ++lead0;
    if (lead0 == c_.size()) {
      c_.clear();
      off_ = 0;
      return;
    }
    if (lead0 > 0) {
      c_.erase(c_.begin(), c_.begin() + long(lead0));
      off_ += int(lead0);
    }
    while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
  }

  int off_ = 0;
  std::vector<K> c_;
};

// Monic gcd via Euclid; the result divides both inputs and is 1 for coprime
// pairs.  Inputs are normalized to plain polynomials by stripping z-powers,
// which are re-accounted by the caller (RationalFunction keeps num/den plain).
template <class K>
Polynomial<K> poly_gcd(Polynomial<K> a, Polynomial<K> b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  a = a.shifted(-a.val());
  b = b.shifted(-b.val());
  while (!b.is_zero()) {
    auto [q, r] = a.divmod(b);
    (void)q;
    a = std::move(b);
    b = std::move(r);
  }
  return a.scaled(a.lead().inverse());
}

}  // namespace toprec
