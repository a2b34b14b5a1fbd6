// Engine for the branch-point residue recursion.  See recursion.hpp for the
// evaluation strategy; the mathematical structure implemented here is
//
//   w_{k+1}^(h)(q, P) = -sum over branch points a, deck maps theta^j of
//       Res_{t->a} dS_{t,o}(q) * W2^(h)(t, theta^j t, P) / omega(t, theta^j t)
//     - sum over three-sheet branch points of
//       Res_{t->a} dS_{t,o}(q) * W3^(h)(t, theta^1 t, theta^2 t, P)
//                   / (omega(t,theta^1 t) * omega(t,theta^2 t)),
//
// where the sources W2/W3 collect all splittings of the spectators and the
// genus among lower correlators (identically-zero one-point genus-zero
// factors pruned before recursing).
#include "toprec/recursion.hpp"

#include <cstdlib>
#include <string>
#include <tuple>

namespace toprec {

namespace {

int order_cap_from_env() {
  const char* e = std::getenv("TOPREC_MAX_ORDER");
  if (!e || !*e) return 128;
  char* end = nullptr;
  long v = std::strtol(e, &end, 10);
  if (end == e || *end != '\0' || v < 4 || v > 1 << 20)
    throw input_error("TOPREC_MAX_ORDER must be an integer between 4 and 2^20");
  return int(v);
}

RatFun as_ratfun(const Value& v, const char* what) {
  if (const auto* sc = std::get_if<Scalar>(&v)) return RatFun(*sc);
  if (const auto* rf = std::get_if<RatFun>(&v)) return *rf;
  throw internal_error(std::string(what) +
                       " did not reduce to a rational function");
}

}  // namespace

Engine::Engine(const SpectralCurve& curve) : c_(curve), o_(curve.basepoint) {
  if (c_.finite_branch_at_infinity)
    throw input_error(
        "the curve is ramified over a finite x-value at z = infinity; the "
        "residue recursion only supports branch points at finite z");
  max_order = order_cap_from_env();
}

Engine::Engine(const SpectralCurve& curve, const Scalar& basepoint)
    : Engine(curve) {
  if (!(basepoint == c_.basepoint)) validate_basepoint(c_, basepoint);
  o_ = basepoint;
}

Value Engine::correlator(int h, const std::vector<Slot>& slots) {
  for (int order = start_order;; order *= 2) {
    if (order > max_order)
      throw resource_error(
          "truncation order " + std::to_string(order) +
          " exceeds the cap; raise TOPREC_MAX_ORDER if this is intended");
    try {
      EvalCtx ctx{order};
      Value v = eval(h, slots, ctx);
      last_order_ = order;
      return v;
    } catch (const InsufficientOrder&) {
    }
  }
}

CorrelatorValue Engine::correlator_detailed(int h,
                                            const std::vector<Slot>& slots) {
  CorrelatorValue cv;
  cv.value.degree = int(slots.size());
  for (int order = start_order;; order *= 2) {
    if (order > max_order)
      throw resource_error(
          "truncation order " + std::to_string(order) +
          " exceeds the cap; raise TOPREC_MAX_ORDER if this is intended");
    cv.contributing.clear();
    try {
      EvalCtx ctx{order};
      // Base cases never touch a branch point; everything else is assembled
      // fresh so the contribution list reflects this very computation.
      if (h == 0 && slots.size() <= 2)
        cv.value.payload = eval(h, slots, ctx);
      else
        cv.value.payload = residue_sum(h, slots, ctx, &cv.contributing);
      last_order_ = order;
      return cv;
    } catch (const InsufficientOrder&) {
    }
  }
}

RatFun Engine::correlator_sym(int h, const std::vector<Scalar>& spectators) {
  std::vector<Slot> slots;
  slots.reserve(spectators.size() + 1);
  slots.push_back(sym_slot());
  for (const Scalar& p : spectators) slots.push_back(point_slot(p));
  return as_ratfun(correlator(h, slots), "symbolic correlator");
}

Value Engine::eval(int h, const std::vector<Slot>& slots, const EvalCtx& ctx) {
  if (h < 0) throw internal_error("negative genus request");
  if (slots.empty()) throw internal_error("correlator needs at least one slot");
  if (h == 0 && slots.size() == 1) return Value(Scalar(0));
  if (h == 0 && slots.size() == 2) return bergman(slots[0], slots[1], ctx);

  bool spect_points = true;
  for (size_t i = 1; i < slots.size(); ++i)
    if (slots[i].kind != Slot::Kind::Point) spect_points = false;

  if (slots[0].kind == Slot::Kind::Sym) {
    if (!spect_points)
      throw internal_error("symbolic first slot with series spectators");
    std::vector<Scalar> pts;
    pts.reserve(slots.size() - 1);
    for (size_t i = 1; i < slots.size(); ++i)
      pts.push_back(std::get<Scalar>(slots[i].val));
    return Value(sym_eval(h, pts, ctx));
  }
  if (spect_points) {
    std::vector<Scalar> pts;
    pts.reserve(slots.size() - 1);
    for (size_t i = 1; i < slots.size(); ++i)
      pts.push_back(std::get<Scalar>(slots[i].val));
    RatFun f = sym_eval(h, pts, ctx);
    return v_mul(rf_subst_value(f, slots[0].val, ctx), slots[0].jac);
  }
  return residue_sum(h, slots, ctx, nullptr);
}

RatFun Engine::sym_eval(int h, const std::vector<Scalar>& pts,
                        const EvalCtx& ctx) {
  MemoKey key{h, pts};
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  std::vector<Slot> slots;
  slots.reserve(pts.size() + 1);
  slots.push_back(sym_slot());
  for (const Scalar& p : pts) slots.push_back(point_slot(p));
  RatFun f =
      as_ratfun(residue_sum(h, slots, ctx, nullptr), "symbolic correlator");
  std::lock_guard<std::mutex> lk(mu_);
  memo_.emplace(key, f);  // first writer wins; all writers agree exactly
  return memo_.find(key)->second;
}

Value Engine::residue_sum(int h, const std::vector<Slot>& slots,
                          const EvalCtx& ctx,
                          std::vector<Scalar>* contributing) {
  int d = slots_max_depth(slots) + 1;
  if (d > 2 * h + int(slots.size()) + 2)
    throw internal_error("tower depth exceeds the structural cap");
  const Slot& out = slots[0];
  std::vector<Slot> spect(slots.begin() + 1, slots.end());
  Value acc = Value(Scalar(0));
  for (size_t bi = 0; bi < c_.branch.size(); ++bi) {
    Value part = residue_at(bi, h, out, spect, d, ctx);
    if (contributing && !known_zero(part))
      contributing->push_back(c_.branch[bi].a);
    acc = v_add(acc, part);
  }
  return v_mul(acc, out.jac);
}

Value Engine::residue_at(size_t bi, int h, const Slot& out,
                         const std::vector<Slot>& spect, int d,
                         const EvalCtx& ctx) {
  const BranchPoint& bp = c_.branch[bi];
  Slot t = ser_slot(v_add(Value(bp.a), unit_series(d)), Value(Scalar(1)));
  Slot tp[2];
  Value oinv[2];
  for (int j = 1; j <= bp.nb; ++j) {
    const DeckLocal& dl = deck_local(bi, j, ctx);
    tp[j - 1] = ser_slot(series_retag(dl.tpval, d), series_retag(dl.gjac, d));
    oinv[j - 1] = series_retag(dl.omega_inv, d);
  }

  Value g = Value(Scalar(0));
  for (int j = 0; j < bp.nb; ++j)
    g = v_add(g, v_mul(assemble_w2(h, spect, t, tp[j], ctx), oinv[j]));
  if (bp.nb == 2)
    g = v_add(g, v_mul(assemble_w3(h, spect, t, tp[0], tp[1], ctx),
                       v_mul(oinv[0], oinv[1])));

  // A value that collapsed below the residue depth has no pole in t.
  if (value_level(g) < d) return Value(Scalar(0));

  // The third-kind pole at the basepoint enters multiplied by the residue of
  // the integrand here; that residue vanishes identically (the correlators
  // are residue-free at branch points), which is also exactly why the result
  // does not depend on the basepoint.  With scalar coefficients the check is
  // exact; deeper in the tower it is verified through the computed window.
  if (!stored_zero(v_coeff(g, d, -1)))
    throw internal_error(
        "branch-point residue of the recursion integrand fails to cancel at "
        "z = " +
        bp.a.str());

  const Series& s = *std::get<SeriesPtr>(g);
  Value acc = Value(Scalar(0));
  if (s.lo < 0) {
    Value base = v_sub(out.val, Value(bp.a));
    Value cur = v_pow(base, s.lo, ctx);
    for (int e = s.lo; e < 0; ++e) {
      if (e != -1) {
        Value ge = v_coeff(g, d, e);
        if (!known_zero(ge)) acc = v_sub(acc, v_mul(ge, cur));
      }
      if (e + 1 < 0) cur = v_mul(cur, base);
    }
  }
  return acc;
}

Value Engine::assemble_w2(int h, const std::vector<Slot>& spect, const Slot& t,
                          const Slot& tp, const EvalCtx& ctx) {
  int k = int(spect.size());
  Value acc = Value(Scalar(0));
  if (h >= 1) {
    std::vector<Slot> args;
    args.reserve(size_t(k) + 2);
    args.push_back(t);
    args.push_back(tp);
    args.insert(args.end(), spect.begin(), spect.end());
    acc = eval(h - 1, args, ctx);
  }
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::vector<Slot> a1{t}, a2{tp};
    for (int i = 0; i < k; ++i)
      ((mask >> unsigned(i)) & 1 ? a1 : a2).push_back(spect[size_t(i)]);
    for (int m = 0; m <= h; ++m) {
      if (m == 0 && a1.size() == 1) continue;  // one-point genus-zero factor
      if (m == h && a2.size() == 1) continue;
      Value f1 = eval(m, a1, ctx);
      if (known_zero(f1)) continue;
      Value f2 = eval(h - m, a2, ctx);
      acc = v_add(acc, v_mul(f1, f2));
    }
  }
  return acc;
}

Value Engine::assemble_w3(int h, const std::vector<Slot>& spect, const Slot& t,
                          const Slot& tp1, const Slot& tp2,
                          const EvalCtx& ctx) {
  int k = int(spect.size());
  Value acc = Value(Scalar(0));
  if (h >= 2) {
    std::vector<Slot> args{t, tp1, tp2};
    args.insert(args.end(), spect.begin(), spect.end());
    acc = eval(h - 2, args, ctx);
  }
  // one leg times a two-leg correlator, over the three leg choices
  const Slot* cyc[3][3] = {
      {&t, &tp1, &tp2}, {&tp1, &tp2, &t}, {&tp2, &t, &tp1}};
  for (auto& legs : cyc) {
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      std::vector<Slot> a1{*legs[0]}, a2{*legs[1], *legs[2]};
      for (int i = 0; i < k; ++i)
        ((mask >> unsigned(i)) & 1 ? a1 : a2).push_back(spect[size_t(i)]);
      for (int m = 0; m + 1 <= h; ++m) {
        if (m == 0 && a1.size() == 1) continue;
        Value f1 = eval(m, a1, ctx);
        if (known_zero(f1)) continue;
        Value f2 = eval(h - 1 - m, a2, ctx);
        acc = v_add(acc, v_mul(f1, f2));
      }
    }
  }
  // triple products over ordered three-way spectator partitions; the genus
  // indices run over all partitions m + n + l = h with identically-zero
  // factors pruned (for no spectators this collapses to m, n, l >= 1)
  long npart = 1;
  for (int i = 0; i < k; ++i) npart *= 3;
  for (long code = 0; code < npart; ++code) {
    std::vector<Slot> a0{t}, a1{tp1}, a2{tp2};
    long cc = code;
    for (int i = 0; i < k; ++i, cc /= 3) {
      int which = int(cc % 3);
      (which == 0 ? a0 : which == 1 ? a1 : a2).push_back(spect[size_t(i)]);
    }
    for (int m = 0; m <= h; ++m) {
      if (m == 0 && a0.size() == 1) continue;
      // Evaluate the first factor only once some (n, l) split survives the
      // pruning: a factor sharing the target's Euler characteristic is legal
      // only in terms that are pruned anyway, and evaluating it eagerly would
      // recurse without descending.
      std::optional<Value> f0;
      for (int n = 0; m + n <= h; ++n) {
        if (n == 0 && a1.size() == 1) continue;
        int l = h - m - n;
        if (l == 0 && a2.size() == 1) continue;
        if (!f0) {
          f0 = eval(m, a0, ctx);
          if (known_zero(*f0)) break;
        }
        Value f1 = eval(n, a1, ctx);
        if (known_zero(f1)) continue;
        Value f2 = eval(l, a2, ctx);
        acc = v_add(acc, v_mul(*f0, v_mul(f1, f2)));
      }
    }
  }
  return acc;
}

const Engine::DeckLocal& Engine::deck_local(size_t bi, int j,
                                            const EvalCtx& ctx) {
  auto key = std::make_tuple(bi, j, ctx.order);
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = decks_.find(key);
    if (it != decks_.end()) return it->second;
  }
  const BranchPoint& bp = c_.branch[bi];
  DeckLocal dl;
  dl.g = deck_germ(c_, bp, j, ctx);
  dl.gjac = series_derivative(dl.g, 0);
  dl.tpval = v_add(Value(bp.a), dl.g);
  Value t = v_add(Value(bp.a), unit_series(0));
  dl.omega_inv = v_inverse(omega_payload(c_, t, dl.tpval, ctx), ctx);
  std::lock_guard<std::mutex> lk(mu_);
  return decks_.emplace(key, std::move(dl)).first->second;
}

}  // namespace toprec
