// Exact identity checks layered on top of the recursion engine: residue
// calculus for rational functions, the pairing operator H (residues against a
// primitive of y dx), free-energy coefficients, potential-moduli read-off
// with the dual evaluation of H through them, reconstruction of the loop
// residuals in the x variable, and the local branch-point identities.
//
// Every check returns a structured verdict carrying the exact mismatch when
// it fails; nothing here is approximate.
#pragma once

#include <string>
#include <vector>

#include "toprec/curve.hpp"
#include "toprec/kernels.hpp"
#include "toprec/recursion.hpp"

namespace toprec {

// ---------------------------------------------------------------------------
// Exact residue calculus on rational functions of the uniformizer.

// Residue of f dz at the finite point p (0 when f is regular there).
Scalar residue_at_point(const RatFun& f, const Scalar& p);

// Residue of f dz at z = infinity (minus the z^{-1} coefficient at infinity).
Scalar residue_at_infinity(const RatFun& f);

// Value of f at z = infinity; throws Error(kInput) when f is unbounded there.
Scalar limit_at_infinity(const RatFun& f);

// Antiderivative of f with poles allowed only at the listed points.  Throws
// Error(kInput) when a logarithmic term appears (a nonzero residue at an
// allowed point) or when f has a pole away from the allowed points.
RatFun rational_primitive(const RatFun& f, const std::vector<Scalar>& poles_allowed);

// ---------------------------------------------------------------------------
// The pairing operator H[psi] = -sum over the poles of psi of
// Res Psi(p) psi(p), with Psi a local primitive of y dx.  On correlator
// differentials the poles are the branch points and the integration constant
// of Psi drops because the correlators are residue-free there.

// H of a one-slot differential payload f(z) dz whose poles all lie at branch
// points.  Throws Error(kInput) when f has a pole elsewhere or a residue.
Scalar h_apply_value(Engine& eng, const RatFun& f);

// H acting on the first slot of w_{k+1}^(h), with the next slot kept
// symbolic and the remaining k-1 slots at the given points; returns the
// payload of the resulting k-slot differential in the symbolic slot.
RatFun h_apply_slot(Engine& eng, int h, const std::vector<Scalar>& spectators);

// H acting on the first slot of the two-point kernel B(., q): the only pole
// is on the diagonal, and the residue there gives -y(q) x'(q) dq exactly.
RatFun h_apply_two_point(const SpectralCurve& c);

// F^(h) = H[w_1^(h)] / (2h - 2); defined for h >= 2 only.
Scalar free_energy(Engine& eng, int h);

// ---------------------------------------------------------------------------
// Potential moduli: the rows of the primitive of y dx, read off from its
// Laurent coefficients, plus the total charge T (the residue of y dx at
// z = infinity).  H[psi] can be evaluated a second, independent way as
// -sum_rows t * J_row(psi) - T * J_T(psi).

struct ModuliRow {
  bool at_origin = false;  // term t * z^{-degree} of Psi (else t * z^{degree})
  long degree = 0;         // > 0
  Scalar t;                // exact coefficient
};

struct Moduli {
  std::vector<ModuliRow> rows;
  Scalar total_charge;  // T; a T-row participates iff nonzero
};

// Reads the moduli off y dx.  Requires the finite poles of y dx to sit at
// the origin (the admissible one-cut shapes); throws Error(kInput) otherwise.
Moduli read_moduli(const SpectralCurve& c);

// Row action J(psi) = -Res_{z->inf} z^degree psi (rows at infinity) or
// -Res_{z->0} z^{-degree} psi (rows at the origin).
Scalar j_row_apply(const ModuliRow& row, const RatFun& psi);

// T-row action: the regularized integral of psi between the two points over
// x = infinity, computed as A(inf) - A(0) for a rational antiderivative A
// of psi.  Throws Error(kInput) when the antiderivative has logarithmic
// terms that do not cancel or an endpoint diverges.
Scalar j_total_charge_apply(const SpectralCurve& c, const RatFun& psi);

// The moduli-side evaluation -sum t*J(psi) - T*J_T(psi).
Scalar h_via_moduli(const SpectralCurve& c, const RatFun& psi);

// ---------------------------------------------------------------------------
// Structured identity checks.  `pass` is the exact verdict; `detail` carries
// the exact mismatch (or the reason for a precondition skip).

struct CheckResult {
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

// Deterministic sample points: small rationals distinct from each other, from
// the basepoint and from every branch point, with x(p) away from every
// branch value.
std::vector<Scalar> sample_points(const SpectralCurve& c, int n, unsigned seed);

// sum over the fiber sheets of w_1^(h)(sigma_i(q)) vanishes identically.
CheckResult check_sheet_sum(Engine& eng, int h);

// w_k^(h) is invariant under all slot permutations at `tuples` random
// rational evaluation tuples.
CheckResult check_symmetry(Engine& eng, int h, int k, int tuples, unsigned seed);

// H on the extra slot of w_{k+1}^(h) equals (2-2h-k) w_k^(h), with the first
// remaining slot symbolic and the others at sample points.
CheckResult check_dilaton(Engine& eng, int h, int k, unsigned seed);

// H[B(., q)] = -y(q) dx(q), the two-point pairing anchor, computed honestly
// from the diagonal residue and compared with the closed form.
CheckResult check_two_point_pairing(Engine& eng);

// H annihilates the planar three-point differential.
CheckResult check_planar_three_point_pairing(Engine& eng, unsigned seed);

// H[w_{k+2}^(h)] - (slot addition applied to H[w_{k+1}^(h)]) = -w_{k+1}^(h):
// the commutator of the pairing with slot addition is minus the identity.
CheckResult check_commutation(Engine& eng, int h, int k, unsigned seed);

// The two evaluations of H[w_1^(h)] (branch-point residues vs moduli rows)
// agree; equivalently the homogeneity relation for F^(h).
CheckResult check_homogeneity(Engine& eng, int h);

// Every correlator with 2h + k <= budget, evaluated at `tuples` sample
// tuples, has purely rational values (no extension coordinate).
CheckResult check_theta_free(Engine& eng, int budget, int tuples, unsigned seed);

// At a branch point joining three sheets, the residue of the propagator
// against the two cross-kernel/pairing terms equals (1/9) B(beta, q) divided
// by the double-pole coefficient of y at beta.
CheckResult check_double_branch_pairing(Engine& eng);

// Exchanging the order of two nested residues at one branch point picks up
// exactly the coincidence residues at u = t and its deck images: verifies
// ResRes(inner u) = ResRes(inner t) - Res_t sum_k Res_{u -> deck^k(t)} on a
// concrete two-variable kernel, per branch point.
CheckResult check_residue_swap(Engine& eng);

// ---------------------------------------------------------------------------
// Loop residuals: the inhomogeneous terms of the sheet-summed loop equations,
// reconstructed from the computed correlators as rational functions of x.
// R^(h) may have at most a simple pole at the hard edge plus a polynomial
// part; D^(h) at most a double pole.

struct LoopResidual {
  bool line1_zero = false;  // sum of y over a fiber vanishes identically
  RatFun r, d;              // in the x variable
  bool r_ok = false;        // poles of r: only at the branch value, order <= 1
  bool d_ok = false;        // poles of d: only at the branch value, order <= 2
  std::string detail;
};

LoopResidual loop_residual(Engine& eng, int h);

// Rewrites a rational function of z that is constant on fibers as a rational
// function of x.  Supported for covers with x - x(s) an exact cube (the
// three-sheet model); throws Error(kInternal) when g is not fiber-constant.
RatFun to_x_function(const SpectralCurve& c, const RatFun& g);

}  // namespace toprec
