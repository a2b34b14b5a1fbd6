// Local kernels shared by the recursion engine and the identity checks: the
// genus-zero Bergman bidifferential, the third-kind propagator, the
// branch-point pairing one-form, and the slot plumbing that lets one code
// path evaluate symbolically, at exact points, and on local series.
//
// Payload convention: a k-slot differential is stored as the scalar /
// rational-function / series factor multiplying the product of the d's of the
// slot coordinates.  Every slot carries the jacobian of its value with
// respect to its own coordinate, so a payload built in one coordinate can be
// re-expressed in another by multiplying jacobians.
#pragma once

#include <stdexcept>
#include <vector>

#include "toprec/curve.hpp"
#include "toprec/error.hpp"
#include "toprec/series.hpp"

namespace toprec {

struct Slot {
  enum class Kind { Sym, Point, Ser };
  Kind kind = Kind::Point;
  Value val = Value(Scalar(0));
  Value jac = Value(Scalar(1));
};

inline Slot sym_slot() {
  return {Slot::Kind::Sym, Value(RatFun::symbol()), Value(Scalar(1))};
}
inline Slot point_slot(const Scalar& p) {
  return {Slot::Kind::Point, Value(p), Value(Scalar(1))};
}
inline Slot ser_slot(Value val, Value jac) {
  return {Slot::Kind::Ser, std::move(val), std::move(jac)};
}

// Depth of the deepest series among the slots, or -1 if none.
inline int slots_max_depth(const std::vector<Slot>& slots) {
  int d = -1;
  for (const Slot& s : slots)
    if (s.kind == Slot::Kind::Ser) d = std::max(d, value_level(s.val));
  return d;
}

// A differential with explicit bookkeeping of how many d-factors it carries;
// products add degrees, quotients cancel them.
struct Differential {
  Value payload = Value(Scalar(0));
  int degree = 0;
};

inline Differential operator*(const Differential& a, const Differential& b) {
  return {v_mul(a.payload, b.payload), a.degree + b.degree};
}
inline Differential operator+(const Differential& a, const Differential& b) {
  if (a.degree != b.degree && !known_zero(a.payload) && !known_zero(b.payload))
    throw std::logic_error("adding differentials of different degree");
  return {v_add(a.payload, b.payload),
          known_zero(a.payload) ? b.degree : a.degree};
}
inline Differential div(const Differential& a, const Differential& b,
                        const EvalCtx& ctx) {
  return {v_mul(a.payload, v_inverse(b.payload, ctx)), a.degree - b.degree};
}

// Bergman kernel payload: jac1*jac2/(v1-v2)^2.  Two coincident exact points
// sit on the double pole.
inline Value bergman(const Slot& a, const Slot& b, const EvalCtx& ctx) {
  Value diff = v_sub(a.val, b.val);
  if (known_zero(diff))
    throw input_error("two-point kernel evaluated on its diagonal");
  return v_mul(v_mul(a.jac, b.jac), v_pow(diff, -2, ctx));
}

// Third-kind propagator payload in the q slot: simple pole +1 at q=t and -1
// at the basepoint q=o.
inline Value third_kind(const Value& t, const Scalar& o, const Slot& q,
                        const EvalCtx& ctx) {
  Value a = v_inverse(v_sub(q.val, t), ctx);
  Value b = v_inverse(v_sub(q.val, Value(o)), ctx);
  return v_mul(q.jac, v_sub(a, b));
}

// Pairing one-form payload at a branch point, relative to the local
// coordinate of t: (y(t) - y(t'))*x'(t).  t and t' are local series a+tau and
// a+g_j(tau); t carries jacobian 1 in its own coordinate.
inline Value omega_payload(const SpectralCurve& c, const Value& t,
                           const Value& tprime, const EvalCtx& ctx) {
  Value dy = v_sub(rf_subst_value(c.y, t, ctx), rf_subst_value(c.y, tprime, ctx));
  return v_mul(dy, poly_eval_value(c.xprime, t, ctx));
}

// Local primitive of y dx at a branch point, with zero constant term: the
// germ of Psi(a+tau) - Psi(a).  y has at worst a double pole at the hard
// edge, where x' has a double zero, so the product never carries a residue.
inline Value psi_germ(const SpectralCurve& c, const BranchPoint& bp, int depth,
                      const EvalCtx& ctx) {
  Value t = v_add(Value(bp.a), unit_series(depth));
  Value ydx = v_mul(rf_subst_value(c.y, t, ctx), poly_eval_value(c.xprime, t, ctx));
  return series_primitive(ydx, depth);
}

// The shift between the two-point correlator and its connected ("barred")
// version: dx(p1)dx(p2)/(x(p1)-x(p2))^2, expressed in the slots' coordinates.
inline Value bar_term(const SpectralCurve& c, const Slot& s1, const Slot& s2,
                      const EvalCtx& ctx) {
  Value x1 = poly_eval_value(c.x, s1.val, ctx);
  Value x2 = poly_eval_value(c.x, s2.val, ctx);
  Value dx1 = v_mul(poly_eval_value(c.xprime, s1.val, ctx), s1.jac);
  Value dx2 = v_mul(poly_eval_value(c.xprime, s2.val, ctx), s2.jac);
  Value diff = v_sub(x1, x2);
  if (known_zero(diff))
    throw input_error("x-plane kernel shift evaluated on its diagonal");
  return v_mul(v_mul(dx1, dx2), v_pow(diff, -2, ctx));
}

}  // namespace toprec
