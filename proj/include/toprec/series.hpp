// Nested truncated Laurent series: the evaluation substrate for every residue
// the engine takes.  A Series lives at a tower depth d (its symbol is the
// residue variable of recursion level d); its coefficients are Values -- exact
// scalars, rational functions in the single global output symbol, or series of
// strictly shallower depth.  Every series carries a validity window [lo, hi):
// exponents below lo are exactly zero, coefficients for exponents in the
// window are known, and nothing is ever fabricated beyond hi.  Reading past a
// window throws InsufficientOrder, which the order-doubling driver catches.
#pragma once

#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "toprec/ratfun.hpp"
#include "toprec/scalar.hpp"

namespace toprec {

struct Series;
using SeriesPtr = std::shared_ptr<const Series>;
using Value = std::variant<Scalar, RatFun, SeriesPtr>;

// Working precision for operations that must choose a truncation (inverses of
// exact data, germ construction).  The driver doubles `order` on demand.
struct EvalCtx {
  int order = 16;
};

// Sentinel: every exponent from the end of storage onward is exactly zero.
inline constexpr int kExactHi = std::numeric_limits<int>::max() / 4;

inline int sat_add(int a, int b) {
  if (a >= kExactHi || b >= kExactHi) return kExactHi;
  long s = long(a) + long(b);
  if (s >= kExactHi) return kExactHi;
  return int(s);
}

class InsufficientOrder : public std::exception {
 public:
  InsufficientOrder(int depth, int wanted, int have_hi)
      : depth_(depth), wanted_(wanted), have_hi_(have_hi) {
    msg_ = "insufficient series order at tower depth " + std::to_string(depth) +
           ": need exponent " + std::to_string(wanted) + ", window ends at " +
           std::to_string(have_hi);
  }
  const char* what() const noexcept override { return msg_.c_str(); }
  int wanted() const { return wanted_; }

 private:
  int depth_, wanted_, have_hi_;
  std::string msg_;
};

struct Series {
  int depth = 0;
  int lo = 0;          // hard valuation floor: exponents < lo are exactly zero
  int hi = kExactHi;   // exclusive end of the known window
  std::vector<Value> c;  // c[i] is the coefficient of sym^(lo + i)
};

// ---- Value basics ----------------------------------------------------------

bool known_zero(const Value& v);

inline bool known_zero(const SeriesPtr& s) {
  if (s->hi != kExactHi) return false;
  for (const Value& v : s->c)
    if (!known_zero(v)) return false;
  return true;
}

inline bool known_zero(const Value& v) {
  if (const auto* sc = std::get_if<Scalar>(&v)) return sc->is_zero();
  if (const auto* rf = std::get_if<RatFun>(&v)) return rf->is_zero();
  return known_zero(std::get<SeriesPtr>(v));
}

// Scalar -> -2, RatFun -> -1, Series -> its depth.
inline int value_level(const Value& v) {
  if (std::holds_alternative<Scalar>(v)) return -2;
  if (std::holds_alternative<RatFun>(v)) return -1;
  return std::get<SeriesPtr>(v)->depth;
}

Value v_add(const Value& a, const Value& b);
Value v_sub(const Value& a, const Value& b);
Value v_mul(const Value& a, const Value& b);
Value v_neg(const Value& a);
Value v_inverse(const Value& a, const EvalCtx& ctx);

// Drop provably-zero fringe coefficients and collapse trivial series.
inline Value simplify(const SeriesPtr& sp) {
  const Series& s = *sp;
  size_t b = 0, e = s.c.size();
  while (b < e && known_zero(s.c[b])) ++b;
  while (e > b && known_zero(s.c[e - 1])) --e;
  int lo = s.lo + int(b);
  if (b == 0 && e == s.c.size()) {
    if (s.hi == kExactHi) {
      if (s.c.empty()) return Scalar(0);
      if (s.lo == 0 && s.c.size() == 1) return s.c[0];
    }
    return sp;
  }
  std::vector<Value> c(s.c.begin() + long(b), s.c.begin() + long(e));
  if (c.empty()) {
    if (s.hi == kExactHi) return Scalar(0);
    auto z = std::make_shared<Series>();
    z->depth = s.depth;
    z->lo = z->hi = s.hi;  // everything below the window end is known zero
    return z;
  }
  if (s.hi == kExactHi && lo == 0 && c.size() == 1) return c[0];
  auto r = std::make_shared<Series>();
  r->depth = s.depth;
  r->lo = lo;
  r->hi = s.hi;
  r->c = std::move(c);
  return r;
}

inline Value make_series(int depth, int lo, int hi, std::vector<Value> c) {
  auto s = std::make_shared<Series>();
  s->depth = depth;
  s->lo = lo;
  s->hi = hi;
  s->c = std::move(c);
  return simplify(SeriesPtr(s));
}

// View any shallower Value as a constant series at `depth`.
inline SeriesPtr promote(const Value& v, int depth) {
  if (const auto* sp = std::get_if<SeriesPtr>(&v)) {
    if ((*sp)->depth == depth) return *sp;
    if ((*sp)->depth > depth)
      throw std::logic_error("tower depth inversion while promoting");
  }
  auto s = std::make_shared<Series>();
  s->depth = depth;
  s->lo = 0;
  s->hi = kExactHi;
  if (!known_zero(v)) s->c.push_back(v);
  return s;
}

// Effective exclusive end of stored content.
inline int stored_end(const Series& s) { return s.lo + int(s.c.size()); }

// ---- arithmetic ------------------------------------------------------------

inline Value series_add(const SeriesPtr& ap, const SeriesPtr& bp, bool subtract) {
  const Series &a = *ap, &b = *bp;
  int lo = std::min(a.lo, b.lo);
  int hi = std::min(a.hi, b.hi);
  int top = std::min(hi, std::max(stored_end(a), stored_end(b)));
  std::vector<Value> c;
  if (top > lo) {
    c.assign(size_t(top - lo), Scalar(0));
    for (int e = a.lo; e < std::min(top, stored_end(a)); ++e)
      c[size_t(e - lo)] = a.c[size_t(e - a.lo)];
    for (int e = b.lo; e < std::min(top, stored_end(b)); ++e) {
      Value& slot = c[size_t(e - lo)];
      const Value& rhs = b.c[size_t(e - b.lo)];
      slot = subtract ? v_sub(slot, rhs) : v_add(slot, rhs);
    }
  }
  return make_series(a.depth, lo, hi, std::move(c));
}

inline Value series_mul(const SeriesPtr& ap, const SeriesPtr& bp) {
  const Series &a = *ap, &b = *bp;
  int lo = sat_add(a.lo, b.lo);
  int hi = std::min(sat_add(a.lo, b.hi), sat_add(b.lo, a.hi));
  int top = std::min(hi, sat_add(stored_end(a), stored_end(b)) - 1);
  std::vector<Value> c;
  if (top > lo) {
    c.assign(size_t(top - lo), Scalar(0));
    for (size_t i = 0; i < a.c.size(); ++i) {
      if (known_zero(a.c[i])) continue;
      for (size_t j = 0; j < b.c.size(); ++j) {
        if (known_zero(b.c[j])) continue;
        int e = a.lo + int(i) + b.lo + int(j);
        if (e >= top) break;
        Value& slot = c[size_t(e - lo)];
        slot = v_add(slot, v_mul(a.c[i], b.c[j]));
      }
    }
  }
  return make_series(a.depth, lo, hi, std::move(c));
}

inline Value v_add(const Value& a, const Value& b) {
  if (known_zero(a)) return b;
  if (known_zero(b)) return a;
  int la = value_level(a), lb = value_level(b);
  int level = std::max(la, lb);
  if (level == -2) return Value(std::get<Scalar>(a) + std::get<Scalar>(b));
  if (level == -1) {
    auto as_rf = [](const Value& v) {
      if (const auto* rf = std::get_if<RatFun>(&v)) return *rf;
      return RatFun(std::get<Scalar>(v));
    };
    return Value(as_rf(a) + as_rf(b));
  }
  return series_add(promote(a, level), promote(b, level), false);
}

inline Value v_sub(const Value& a, const Value& b) {
  if (known_zero(b)) return a;
  if (known_zero(a)) return v_neg(b);
  int la = value_level(a), lb = value_level(b);
  int level = std::max(la, lb);
  if (level == -2) return Value(std::get<Scalar>(a) - std::get<Scalar>(b));
  if (level == -1) {
    auto as_rf = [](const Value& v) {
      if (const auto* rf = std::get_if<RatFun>(&v)) return *rf;
      return RatFun(std::get<Scalar>(v));
    };
    return Value(as_rf(a) - as_rf(b));
  }
  return series_add(promote(a, level), promote(b, level), true);
}

inline Value v_neg(const Value& a) {
  if (const auto* sc = std::get_if<Scalar>(&a)) return Value(-*sc);
  if (const auto* rf = std::get_if<RatFun>(&a)) return Value(-*rf);
  const Series& s = *std::get<SeriesPtr>(a);
  auto r = std::make_shared<Series>(s);
  for (Value& v : r->c) v = v_neg(v);
  return Value(SeriesPtr(r));
}

inline Value v_mul(const Value& a, const Value& b) {
  if (known_zero(a) || known_zero(b)) return Scalar(0);
  int level = std::max(value_level(a), value_level(b));
  if (level == -2) return Value(std::get<Scalar>(a) * std::get<Scalar>(b));
  if (level == -1) {
    auto as_rf = [](const Value& v) {
      if (const auto* rf = std::get_if<RatFun>(&v)) return *rf;
      return RatFun(std::get<Scalar>(v));
    };
    return Value(as_rf(a) * as_rf(b));
  }
  return series_mul(promote(a, level), promote(b, level));
}

// Coefficient of sym_depth^n.  Values of shallower level are constants in the
// symbol; deeper values cannot occur in a well-formed tower.
inline Value v_coeff(const Value& v, int depth, int n) {
  int lv = value_level(v);
  if (lv < depth) return n == 0 ? v : Value(Scalar(0));
  if (lv > depth) throw std::logic_error("tower depth inversion in v_coeff");
  const Series& s = *std::get<SeriesPtr>(v);
  if (n < s.lo) return Scalar(0);
  if (n < stored_end(s)) return s.c[size_t(n - s.lo)];
  if (s.hi == kExactHi || n < s.hi) return Scalar(0);
  throw InsufficientOrder(depth, n, s.hi);
}

// Lowest exponent with a coefficient not provably zero; throws when the whole
// window is provably zero but the series is not exact (valuation unknowable).
inline int series_valuation(const SeriesPtr& sp) {
  const Series& s = *sp;
  for (size_t i = 0; i < s.c.size(); ++i)
    if (!known_zero(s.c[i])) return s.lo + int(i);
  if (s.hi == kExactHi)
    throw std::domain_error("valuation of the zero series");
  throw InsufficientOrder(s.depth, s.hi, s.hi);
}

inline Value series_truncate(const Value& v, int depth, int new_hi) {
  if (value_level(v) < depth) {
    if (new_hi <= 0) {
      auto s = std::make_shared<Series>();
      s->depth = depth;
      s->lo = s->hi = new_hi;
      return Value(SeriesPtr(s));
    }
    return v;
  }
  const Series& s = *std::get<SeriesPtr>(v);
  if (new_hi >= s.hi) return v;
  auto r = std::make_shared<Series>();
  r->depth = s.depth;
  r->lo = s.lo;
  r->hi = new_hi;
  int top = std::min(new_hi, stored_end(s));
  if (top > s.lo)
    r->c.assign(s.c.begin(), s.c.begin() + long(top - s.lo));
  return simplify(SeriesPtr(r));
}

// Multiply by sym^k.
inline Value series_shift(const Value& v, int depth, int k) {
  if (k == 0) return v;
  SeriesPtr s = promote(v, depth);
  auto r = std::make_shared<Series>(*s);
  r->lo += k;
  r->hi = sat_add(r->hi, k);
  return simplify(SeriesPtr(r));
}

// d/dsym at the series' own depth.
inline Value series_derivative(const Value& v, int depth) {
  SeriesPtr sp = promote(v, depth);
  const Series& s = *sp;
  std::vector<Value> c;
  c.reserve(s.c.size());
  for (size_t i = 0; i < s.c.size(); ++i)
    c.push_back(v_mul(s.c[i], Value(Scalar(s.lo + int(i)))));
  int hi = s.hi == kExactHi ? kExactHi : s.hi - 1;
  return make_series(depth, s.lo - 1, hi, std::move(c));
}

// Term-wise primitive with zero integration constant; a nonzero residue slot
// makes the primitive logarithmic, which exact arithmetic refuses.
inline Value series_primitive(const Value& v, int depth) {
  SeriesPtr sp = promote(v, depth);
  const Series& s = *sp;
  if (s.hi <= -1 && s.hi != kExactHi) throw InsufficientOrder(depth, -1, s.hi);
  std::vector<Value> c;
  c.reserve(s.c.size());
  for (size_t i = 0; i < s.c.size(); ++i) {
    int e = s.lo + int(i);
    if (e == -1) {
      if (!known_zero(s.c[i]))
        throw std::domain_error("logarithmic primitive: residue term present");
      c.push_back(Scalar(0));
      continue;
    }
    c.push_back(v_mul(s.c[i], Value(Scalar(Rat(1), Rat(0)) / Scalar(e + 1))));
  }
  int hi = s.hi == kExactHi ? kExactHi : s.hi + 1;
  return make_series(depth, s.lo + 1, hi, std::move(c));
}

// 1/v.  For series: factor the valuation, invert the unit by a geometric
// (Neumann) sum; the resulting window is [-val, hi - 2*val) and exact
// inputs are developed to ctx.order relative terms.
inline Value v_inverse(const Value& a, const EvalCtx& ctx) {
  if (const auto* sc = std::get_if<Scalar>(&a)) return Value(sc->inverse());
  if (const auto* rf = std::get_if<RatFun>(&a)) return Value(rf->inverse());
  SeriesPtr sp = std::get<SeriesPtr>(a);
  int depth = sp->depth;
  int val = series_valuation(sp);
  Value lead = v_coeff(Value(sp), depth, val);
  Value lead_inv = v_inverse(lead, ctx);
  // u := lead_inv * sym^-val * s - 1, valuation >= 1.
  Value unit = v_mul(series_shift(Value(sp), depth, -val), lead_inv);
  Value u = v_sub(unit, Value(Scalar(1)));
  int rel = sp->hi == kExactHi ? ctx.order : sp->hi - val;
  // sum (-u)^k for k = 0.. while the term can still touch the window
  Value acc = Scalar(1);
  Value term = Scalar(1);
  Value mu = v_neg(u);
  for (int k = 1; k < rel; ++k) {
    term = series_truncate(v_mul(term, mu), depth, rel);
    if (known_zero(term)) break;
    if (value_level(term) == depth &&
        std::get<SeriesPtr>(term)->c.empty())
      break;  // nothing representable left below the window end
    acc = v_add(acc, term);
  }
  acc = series_truncate(acc, depth, rel);
  return series_shift(v_mul(acc, lead_inv), depth, -val);
}

inline Value v_pow(const Value& a, long e, const EvalCtx& ctx) {
  if (e < 0) return v_pow(v_inverse(a, ctx), -e, ctx);
  Value acc = Scalar(1), base = a;
  for (; e > 0; e >>= 1) {
    if (e & 1) acc = v_mul(acc, base);
    if (e > 1) base = v_mul(base, base);
  }
  return acc;
}

// Horner evaluation of a Laurent polynomial over Scalar at any Value.
inline Value poly_eval_value(const Polynomial<Scalar>& p, const Value& at,
                             const EvalCtx& ctx) {
  if (p.is_zero()) return Scalar(0);
  Value acc = Scalar(0);
  const auto& c = p.coeffs();
  for (size_t i = c.size(); i-- > 0;) acc = v_add(v_mul(acc, at), Value(c[i]));
  if (p.val() != 0) acc = v_mul(acc, v_pow(at, p.val(), ctx));
  return acc;
}

// Substitute `at` for the symbol of a rational function in the curve
// uniformizer.  This is also the cache-specialization path of the engine.
inline Value rf_subst_value(const RatFun& f, const Value& at, const EvalCtx& ctx) {
  if (f.is_zero()) return Scalar(0);
  Value num = poly_eval_value(f.num(), at, ctx);
  Value den = poly_eval_value(f.den(), at, ctx);
  return v_mul(num, v_inverse(den, ctx));
}

// Laurent expansion of f in the local coordinate sym = z - a at depth `depth`.
inline Value expand_at(const RatFun& f, const Scalar& a, int depth,
                       const EvalCtx& ctx) {
  Value local = make_series(depth, 0, kExactHi, {Value(a), Value(Scalar(1))});
  return rf_subst_value(f, local, ctx);
}

// f(g) where g has valuation >= 1.  The result window accounts for the
// truncation of f itself: terms of f beyond its window contribute only at
// order >= hi_f * val(g).
inline Value compose_series(const Value& fv, const Value& g, const EvalCtx& ctx) {
  int gd = value_level(g);
  if (gd < 0) throw std::logic_error("compose target must be a series");
  SeriesPtr gp = std::get<SeriesPtr>(g);
  if (gp->lo < 1)
    throw std::domain_error("composition requires inner valuation >= 1");
  if (value_level(fv) < 0) return fv;  // constants compose trivially
  SeriesPtr fp = std::get<SeriesPtr>(fv);
  const Series& f = *fp;
  Value acc = Scalar(0);
  for (size_t i = f.c.size(); i-- > 0;) acc = v_add(v_mul(acc, g), f.c[i]);
  if (f.lo != 0) acc = v_mul(acc, v_pow(g, f.lo, ctx));
  if (f.hi != kExactHi) {
    int gval = gp->lo;  // a proven lower bound on val(g)
    acc = series_truncate(acc, gd, f.hi * gval);
  }
  return acc;
}

// Functional inverse of a depth-d series with valuation exactly 1, by Newton
// iteration on exact polynomial truncations.  The result window matches the
// input window (exact inputs are developed to ctx.order).
inline Value reverse_series(const Value& fv, const EvalCtx& ctx) {
  if (value_level(fv) < 0)
    throw std::domain_error("series reversion needs valuation exactly 1");
  SeriesPtr fp = std::get<SeriesPtr>(fv);
  int depth = fp->depth;
  if (series_valuation(fp) != 1)
    throw std::domain_error("series reversion needs valuation exactly 1");
  int target = fp->hi == kExactHi ? std::max(2, ctx.order) : fp->hi;
  Value c1 = v_coeff(fv, depth, 1);
  Value g = make_series(depth, 1, kExactHi, {v_inverse(c1, ctx)});
  int correct = 1;  // g matches the true reverse through this exponent
  while (correct < target - 1) {
    int next = std::min(2 * correct, target - 1);
    // Work with g as an exact polynomial; errors enter only beyond `correct`.
    Value fg = compose_series(fv, g, ctx);
    Value err = v_sub(fg, make_series(depth, 1, kExactHi, {Value(Scalar(1))}));
    Value fpg = compose_series(series_derivative(fv, depth), g, ctx);
    Value corr = v_mul(err, v_inverse(fpg, ctx));
    g = series_truncate(v_sub(g, corr), depth, next + 1);
    // Re-declare as exact polynomial truncation for the next round.
    SeriesPtr gp = std::get<SeriesPtr>(g);
    auto relax = std::make_shared<Series>(*gp);
    relax->hi = kExactHi;
    g = Value(SeriesPtr(relax));
    correct = next;
  }
  return series_truncate(g, depth, target);
}

// (1 + u)^(1/m) for a series u of valuation >= 1, via the binomial series
// with exact rational binomial coefficients.  Used to normalize deck germs:
// the m-th root of the branch unit never leaves the coefficient field.
inline Value root_unit(const Value& u, int m, const EvalCtx& ctx) {
  int depth = value_level(u);
  if (depth < 0) {
    if (known_zero(u)) return Scalar(1);
    throw std::logic_error("root_unit expects a series of valuation >= 1");
  }
  SeriesPtr up = std::get<SeriesPtr>(u);
  if (up->lo < 1) throw std::domain_error("root_unit needs valuation >= 1");
  int rel = up->hi == kExactHi ? ctx.order : up->hi;
  Value acc = Scalar(1);
  Value upow = Scalar(1);
  Rat binom(1);
  for (int k = 1; k < rel; ++k) {
    binom *= Rat(1, m) - Rat(k - 1);
    binom /= Rat(k);
    upow = series_truncate(v_mul(upow, u), depth, rel);
    if (known_zero(upow)) break;
    acc = v_add(acc, v_mul(upow, Value(Scalar(binom))));
  }
  return series_truncate(acc, depth, rel);
}

// Structural equality for fully exact values (tests and stability checks).
inline bool v_equal(const Value& a, const Value& b) {
  return known_zero(v_sub(a, b));
}

// True when every stored coefficient is provably zero, i.e. the value
// vanishes through its entire known window (weaker than known_zero, which
// additionally demands exactness).
inline bool stored_zero(const Value& v) {
  if (const auto* sc = std::get_if<Scalar>(&v)) return sc->is_zero();
  if (const auto* rf = std::get_if<RatFun>(&v)) return rf->is_zero();
  const Series& s = *std::get<SeriesPtr>(v);
  for (const Value& c : s.c)
    if (!stored_zero(c)) return false;
  return true;
}

// The local coordinate itself as an exact series at `depth`.
inline Value unit_series(int depth) {
  return make_series(depth, 1, kExactHi, {Value(Scalar(1))});
}

// Move a series whose coefficients are plain Scalars/RatFuns to another depth
// (used to re-home cached local germs into a fresh evaluation level).
inline Value series_retag(const Value& v, int depth) {
  int lv = value_level(v);
  if (lv < 0) return v;
  const Series& s = *std::get<SeriesPtr>(v);
  for (const Value& c : s.c)
    if (value_level(c) >= 0)
      throw std::logic_error("series_retag needs flat coefficients");
  auto r = std::make_shared<Series>(s);
  r->depth = depth;
  return Value(SeriesPtr(r));
}

}  // namespace toprec
