// The residue recursion computing the correlator differentials w_k^(h) of a
// genus-zero spectral curve.  Each correlator is a sum over branch points of
// residues of third-kind propagators against source terms built from lower
// correlators: branch points joining two sheets contribute the quadratic
// source through their single nontrivial deck map, and branch points joining
// three sheets contribute the quadratic source through both deck maps plus a
// cubic (three-leg) source divided by both pairing forms.
//
// Evaluation strategy: a correlator with a symbolic first slot and exact
// spectator points is assembled once as an exact rational function and
// memoized; evaluations at points or local series then substitute into the
// memoized form.  Only slots that are genuinely local series with further
// series spectators (the nested legs the recursion itself creates) are
// evaluated by a fresh residue pass, one tower depth down.
#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "toprec/curve.hpp"
#include "toprec/error.hpp"
#include "toprec/kernels.hpp"
#include "toprec/series.hpp"

namespace toprec {

// A correlator value with its d-factor count and the branch points that
// contributed a nonzero residue.
struct CorrelatorValue {
  Differential value;
  std::vector<Scalar> contributing;
};

class Engine {
 public:
  explicit Engine(const SpectralCurve& curve);
  Engine(const SpectralCurve& curve, const Scalar& basepoint);

  // w_k^(h) on the given slots (slots.size() = k >= 1).  Adaptive: retries
  // with doubled truncation order when a window is exhausted, up to
  // max_order, then reports a resource error.
  Value correlator(int h, const std::vector<Slot>& slots);
  CorrelatorValue correlator_detailed(int h, const std::vector<Slot>& slots);

  // Symbolic first slot over exact spectator points: the payload f of
  // w = f(q) dq dp_2 ... dp_k.
  RatFun correlator_sym(int h, const std::vector<Scalar>& spectators);

  // Single evaluation at a fixed truncation order; throws InsufficientOrder
  // instead of retrying.
  Value eval(int h, const std::vector<Slot>& slots, const EvalCtx& ctx);

  const SpectralCurve& curve() const { return c_; }
  const Scalar& basepoint() const { return o_; }
  int last_order() const { return last_order_; }

  int start_order = 16;
  int max_order = 128;  // overridden by TOPREC_MAX_ORDER at construction

 private:
  struct MemoKey {
    int h;
    std::vector<Scalar> pts;
    bool operator<(const MemoKey& r) const {
      if (h != r.h) return h < r.h;
      if (pts.size() != r.pts.size()) return pts.size() < r.pts.size();
      for (size_t i = 0; i < pts.size(); ++i) {
        if (pts[i] < r.pts[i]) return true;
        if (r.pts[i] < pts[i]) return false;
      }
      return false;
    }
  };

  // Local data at one branch point for one deck map, at one truncation
  // order, all at tower depth 0: the deck germ g (deviation from the branch
  // location), its derivative, and the inverse pairing form.
  struct DeckLocal {
    Value g;
    Value gjac;
    Value tpval;      // a + g
    Value omega_inv;  // 1/((y(t) - y(theta^j t)) x'(t))
  };

  RatFun sym_eval(int h, const std::vector<Scalar>& pts, const EvalCtx& ctx);
  Value residue_sum(int h, const std::vector<Slot>& slots, const EvalCtx& ctx,
                    std::vector<Scalar>* contributing);
  Value residue_at(size_t bp_index, int h, const Slot& out,
                   const std::vector<Slot>& spect, int depth,
                   const EvalCtx& ctx);
  Value assemble_w2(int h, const std::vector<Slot>& spect, const Slot& t,
                    const Slot& tp, const EvalCtx& ctx);
  Value assemble_w3(int h, const std::vector<Slot>& spect, const Slot& t,
                    const Slot& tp1, const Slot& tp2, const EvalCtx& ctx);
  const DeckLocal& deck_local(size_t bp_index, int j, const EvalCtx& ctx);

  const SpectralCurve& c_;
  Scalar o_;
  std::map<MemoKey, RatFun> memo_;
  std::map<std::tuple<size_t, int, int>, DeckLocal> decks_;
  std::mutex mu_;
  int last_order_ = 0;
};

}  // namespace toprec
