// Genus-0 spectral curves: a rational parametrization x(z), y(z), declared
// sheet maps of the x-cover, and the derived branch-point data (location,
// branching number, deck transformations) the recursion consumes.
#pragma once

#include <string>
#include <vector>

#include "toprec/series.hpp"

namespace toprec {

struct BranchPoint {
  Scalar a;      // location in the uniformizer
  int nb = 1;    // branching number = order of vanishing of dx at a
  Scalar xval;   // branch value x(a)
  Scalar y_m2;   // nb = 2 only: coefficient of (z-a)^{-2} in y at a
  // exact_sheet[j-1]: index of a declared sheet map realizing the deck
  // transformation with multiplier (-1)^j resp. theta^j at a, or -1 when the
  // deck exists only as a series germ.
  std::vector<int> exact_sheet;
};

struct SpectralCurve {
  bool field_ext = false;  // coefficients in Q(w), w^2 + w + 1 = 0
  Polynomial<Scalar> x;    // Laurent polynomial
  RatFun xr;               // x as a rational function, for substitution
  RatFun y;
  RatFun yprime;
  Polynomial<Scalar> xprime;
  std::vector<RatFun> sheets;  // sheet maps; sheets[0] is the identity
  Scalar basepoint;
  bool cauchy_type = false;

  std::vector<BranchPoint> branch;
  // x stays finite at z = infinity and the cover ramifies there: such a curve
  // loads (branch-points reporting, fibers) but the recursion refuses it,
  // since the residue arithmetic cannot reach that point in this coordinate.
  bool finite_branch_at_infinity = false;
  std::string fingerprint;  // FNV-1a 64 over the canonical description
  std::string name;         // basename of the source file, for reports

  int nsheets() const { return int(sheets.size()); }
  std::string canonical_text() const;
};

// Parse and fully validate a curve description (line-oriented key = value
// text; see README for the format).  Throws Error(kInput) with a line-tagged
// message on any violation.
SpectralCurve load_curve_text(const std::string& text);
SpectralCurve load_curve_file(const std::string& path);

// {sigma_i(p)}: the full fiber through p, in declared sheet order.
std::vector<Scalar> fiber_point(const SpectralCurve& c, const Scalar& p);

// Checks that o is a usable recursion basepoint: finite x-value away from
// every branch value, not a branch point, with a pole-free non-degenerate
// fiber.  Throws Error(kInput) otherwise.
void validate_basepoint(const SpectralCurve& c, const Scalar& o);

// Local deck transformation at a branch point: returns g with
// theta^j(a + tau) = a + g(tau) as a depth-0 series in tau, with
// g'(0) = -1 (nb = 1) or theta^j (nb = 2).  Exact sheet maps are expanded
// directly; otherwise the germ is built by normalizing x - x(a) to a pure
// power and verified against x to the context order.
Value deck_germ(const SpectralCurve& c, const BranchPoint& bp, int j,
                const EvalCtx& ctx);

}  // namespace toprec
