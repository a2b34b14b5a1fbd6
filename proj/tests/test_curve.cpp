// Curve descriptions: parsing, validation, branch-point analysis, deck
// transformations (exact sheet maps and series germs), and fingerprints.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "helpers.hpp"
#include "toprec/curve.hpp"
#include "toprec/error.hpp"

using namespace toprec;
using toprec_test::fixture;
using toprec_test::rf;
using toprec_test::sc;

namespace {

std::string load_error(const std::string& text) {
  try {
    load_curve_text(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::kInput);
    return e.what();
  }
  return "";
}

Scalar coeff_sc(const Value& v, int n) {
  Value c = v_coeff(v, 0, n);
  REQUIRE(value_level(c) == -2);
  return std::get<Scalar>(c);
}

}  // namespace

TEST_CASE("two-sheeted curve with one simple branch point") {
  SpectralCurve c = fixture("airy.curve");
  CHECK(!c.field_ext);
  CHECK(!c.cauchy_type);
  CHECK(!c.finite_branch_at_infinity);
  CHECK(c.nsheets() == 2);
  CHECK(c.name == "airy");
  CHECK(c.basepoint == Scalar(1));
  REQUIRE(c.branch.size() == 1);
  const BranchPoint& b = c.branch[0];
  CHECK(b.a == Scalar(0));
  CHECK(b.nb == 1);
  CHECK(b.xval == Scalar(0));
  REQUIRE(b.exact_sheet.size() == 1);
  CHECK(b.exact_sheet[0] == 1);  // -z realizes the deck map
  auto f = fiber_point(c, Scalar(2));
  REQUIRE(f.size() == 2);
  CHECK(f[0] == Scalar(2));
  CHECK(f[1] == Scalar(-2));
}

TEST_CASE("three-sheeted curve with a double branch point and hard edge") {
  SpectralCurve c = fixture("eisenstein.curve");
  CHECK(c.field_ext);
  CHECK(c.cauchy_type);
  CHECK(c.nsheets() == 3);
  REQUIRE(c.branch.size() == 1);
  const BranchPoint& b = c.branch[0];
  CHECK(b.a == Scalar(0));
  CHECK(b.nb == 2);
  CHECK(b.xval == Scalar(0));
  CHECK(b.y_m2 == Scalar(1));
  REQUIRE(b.exact_sheet.size() == 2);
  CHECK(b.exact_sheet[0] == 1);  // w*z has multiplier w
  CHECK(b.exact_sheet[1] == 2);  // w^2*z has multiplier w^2
  auto f = fiber_point(c, Scalar(2));
  CHECK(f[1] == Scalar(2) * Scalar::theta());
  CHECK(f[2] == Scalar(2) * Scalar::theta().pow(2));
}

TEST_CASE("translated curve relocates the branch point") {
  SpectralCurve c = fixture("eisenstein-shift.curve");
  REQUIRE(c.branch.size() == 1);
  CHECK(c.branch[0].a == Scalar(1));
  CHECK(c.branch[0].nb == 2);
  CHECK(c.branch[0].y_m2 == Scalar(1));
  CHECK(c.branch[0].exact_sheet[0] == 1);
  CHECK(c.basepoint == Scalar(2));
}

TEST_CASE("scaled curve doubles the hard-edge coefficient") {
  SpectralCurve c = fixture("eisenstein-scaled.curve");
  REQUIRE(c.branch.size() == 1);
  CHECK(c.branch[0].y_m2 == Scalar(2));
}

TEST_CASE("x with poles at zero and infinity yields two simple branch points") {
  SpectralCurve c = fixture("zhukovsky.curve");
  CHECK(!c.finite_branch_at_infinity);
  REQUIRE(c.branch.size() == 2);
  CHECK(c.branch[0].a == Scalar(-1));
  CHECK(c.branch[0].xval == Scalar(-2));
  CHECK(c.branch[1].a == Scalar(1));
  CHECK(c.branch[1].xval == Scalar(2));
  // z -> 1/z fixes both branch points with multiplier -1.
  CHECK(c.branch[0].exact_sheet[0] == 1);
  CHECK(c.branch[1].exact_sheet[0] == 1);
}

TEST_CASE("ramification over a finite x-value at infinity is flagged") {
  SpectralCurve c = fixture("infinity-branch.curve");
  CHECK(c.finite_branch_at_infinity);
  CHECK(c.branch.empty());
}

TEST_CASE("exact deck maps expand to their sheet series") {
  EvalCtx ctx;
  SpectralCurve a = fixture("airy.curve");
  Value g = deck_germ(a, a.branch[0], 1, ctx);
  CHECK(coeff_sc(g, 1) == Scalar(-1));
  CHECK(known_zero(v_sub(g, v_neg(unit_series(0)))));

  SpectralCurve e = fixture("eisenstein.curve");
  Value g1 = deck_germ(e, e.branch[0], 1, ctx);
  Value g2 = deck_germ(e, e.branch[0], 2, ctx);
  CHECK(coeff_sc(g1, 1) == Scalar::theta());
  CHECK(coeff_sc(g2, 1) == Scalar::theta().pow(2));
  CHECK_THROWS_AS(deck_germ(a, a.branch[0], 2, ctx), Error);
}

TEST_CASE("series germ at a branch point without a rational deck map") {
  EvalCtx ctx;
  SpectralCurve c = fixture("cubic-germ.curve");
  REQUIRE(c.branch.size() == 2);
  CHECK(c.branch[0].a == sc("-2/3"));
  CHECK(c.branch[1].a == Scalar(0));
  CHECK(c.branch[1].exact_sheet[0] == -1);

  Value g = deck_germ(c, c.branch[1], 1, ctx);
  CHECK(coeff_sc(g, 1) == Scalar(-1));
  CHECK(coeff_sc(g, 2) == Scalar(-1));
  CHECK(coeff_sc(g, 3) == Scalar(-1));
  CHECK(coeff_sc(g, 4) == Scalar(-2));

  // x(a + g(tau)) = x(a + tau) through the computed window.
  Value at = v_add(Value(c.branch[1].a), unit_series(0));
  Value err = v_sub(poly_eval_value(c.x, v_add(Value(c.branch[1].a), g), ctx),
                    poly_eval_value(c.x, at, ctx));
  CHECK(stored_zero(err));

  // The deck map is an involution: g(g(tau)) = tau through the window.
  Value gg = compose_series(g, g, ctx);
  CHECK(stored_zero(v_sub(gg, unit_series(0))));

  // Same at the other simple branch point.
  Value h = deck_germ(c, c.branch[0], 1, ctx);
  CHECK(coeff_sc(h, 1) == Scalar(-1));
  CHECK(stored_zero(v_sub(compose_series(h, h, ctx), unit_series(0))));
}

TEST_CASE("branching number above two is rejected") {
  std::string msg;
  try {
    fixture("quartic-reject.curve");
  } catch (const Error& e) {
    msg = e.what();
  }
  CHECK(msg.find("unsupported branching number 3") != std::string::npos);
}

TEST_CASE("cusps are rejected") {
  std::string msg = load_error(
      "field = \"Q\"\nx = \"z^2\"\ny = \"z^2\"\nsheets = [\"z\", \"-z\"]\n"
      "basepoint = \"1\"\n");
  CHECK(msg.find("cusp at z = 0") != std::string::npos);
}

TEST_CASE("double branch points require the extension field") {
  std::string msg = load_error(
      "field = \"Q\"\nx = \"z^3\"\ny = \"z\"\nsheets = [\"z\"]\n"
      "basepoint = \"1\"\n");
  CHECK(msg.find("requires the extension field") != std::string::npos);
}

TEST_CASE("the hard-edge order of y at a double branch point is checked") {
  std::string msg = load_error(
      "field = \"Q(w); w^2+w+1 = 0\"\nx = \"z^3\"\ny = \"z\"\n"
      "sheets = [\"z\", \"w*z\", \"w^2*z\"]\nbasepoint = \"1\"\n");
  CHECK(msg.find("must start at (z-a)^-2") != std::string::npos);
}

TEST_CASE("the sheet sum of y must vanish on admissible three-sheet curves") {
  std::string msg = load_error(
      "field = \"Q(w); w^2+w+1 = 0\"\nx = \"z^3\"\ny = \"z^-2 + z^3\"\n"
      "sheets = [\"z\", \"w*z\", \"w^2*z\"]\nbasepoint = \"1\"\n");
  CHECK(msg.find("trace-free condition fails") != std::string::npos);
}

TEST_CASE("coinciding branch values are rejected") {
  std::string msg = load_error(
      "field = \"Q\"\nx = \"1/4*z^4 - 1/2*z^2\"\ny = \"z\"\n"
      "sheets = [\"z\"]\nbasepoint = \"2\"\n");
  CHECK(msg.find("share the branch value") != std::string::npos);
}

TEST_CASE("sheet list structure is validated") {
  std::string base =
      "field = \"Q\"\nx = \"z^2\"\ny = \"z\"\nbasepoint = \"5\"\n";
  CHECK(load_error(base + "sheets = [\"z^2\"]\n").find("identity") !=
        std::string::npos);
  CHECK(load_error(base + "sheets = [\"z\", \"z+1\"]\n")
            .find("does not preserve x") != std::string::npos);
  CHECK(load_error(base + "sheets = \"z\"\n").find("[list]") !=
        std::string::npos);
  CHECK(load_error(base + "sheets = [\"z\", \"z\"]\n")
            .find("degenerate fiber") != std::string::npos);
}

TEST_CASE("basepoint regularity is enforced") {
  CHECK(load_error("field = \"Q\"\nx = \"z^2\"\ny = \"z\"\n"
                   "sheets = [\"z\", \"-z\"]\nbasepoint = \"0\"\n")
            .find("is a branch point") != std::string::npos);
  CHECK(load_error("field = \"Q\"\nx = \"z + z^-1\"\ny = \"z\"\n"
                   "sheets = [\"z\", \"z^-1\"]\nbasepoint = \"0\"\n")
            .find("is a pole of x") != std::string::npos);
  // z = -1 is a regular point of x = z^2 + z^3 lying over the branch value 0.
  CHECK(load_error("field = \"Q\"\nx = \"z^2 + z^3\"\ny = \"z\"\n"
                   "sheets = [\"z\"]\nbasepoint = \"-1\"\n")
            .find("lies in the fiber over the branch value") !=
        std::string::npos);
  CHECK(load_error("field = \"Q\"\nx = \"z^2\"\ny = \"z\"\n"
                   "sheets = [\"z\", \"-z\"]\nbasepoint = \"z\"\n")
            .find("rational constant") != std::string::npos);

  SpectralCurve a = fixture("airy.curve");
  validate_basepoint(a, Scalar(5));  // fine: no throw
  CHECK_THROWS_AS(validate_basepoint(a, Scalar(0)), Error);
}

TEST_CASE("file structure errors are reported with their line") {
  CHECK(load_error("field = \"Q\"\nhusk\n").find("line 2") !=
        std::string::npos);
  CHECK(load_error("x = \"z^2\"\nx = \"z^3\"\n").find("duplicate key 'x'") !=
        std::string::npos);
  CHECK(load_error("tone = \"3\"\n").find("unknown key 'tone'") !=
        std::string::npos);
  CHECK(load_error("field = \"Q(i)\"\nx = \"z^2\"\ny = \"z\"\n"
                   "sheets = [\"z\", \"-z\"]\nbasepoint = \"1\"\n")
            .find("unsupported field declaration") != std::string::npos);
  CHECK(load_error("field = \"Q\"\ny = \"z\"\nsheets = [\"z\"]\n"
                   "basepoint = \"1\"\nx = \"3\"\n")
            .find("x must not be constant") != std::string::npos);
  CHECK(load_error("field = \"Q\"\nx = \"1/(z-1)\"\ny = \"z\"\n"
                   "sheets = [\"z\"]\nbasepoint = \"2\"\n")
            .find("Laurent polynomial") != std::string::npos);
  CHECK(load_error("field = \"Q\"\nx = \"z^2\"\ny = \"0\"\n"
                   "sheets = [\"z\", \"-z\"]\nbasepoint = \"1\"\n")
            .find("y must not be identically zero") != std::string::npos);
  CHECK(load_error("field = \"Q\"\nx = \"z^2\"\ny = \"z\"\n"
                   "sheets = [\"z\", \"-z\"]\nbasepoint = \"1\"\n"
                   "cauchy_type = \"yes\"\n")
            .find("true or false") != std::string::npos);
  CHECK(load_error("field = \"Q\"\nx = \"z^2\"\ny = \"z\"\n"
                   "sheets = [\"z\", \"-z\"]\nbasepoint = \"1\"\n"
                   "cauchy_type = true\n")
            .find("exactly three sheets") != std::string::npos);
  CHECK(load_error("x = \"z^2\"").find("missing required key 'field'") !=
        std::string::npos);
  CHECK_THROWS_AS(load_curve_file(toprec_test::curve_path("no-such.curve")),
                  Error);
}

TEST_CASE("comments and duplicate whitespace are ignored") {
  SpectralCurve c = load_curve_text(
      "# a descriptive comment\n"
      "field = \"Q\"   # trailing comment\n"
      "\n"
      "x = \"z^2\"\n"
      "y = \"z\"\n"
      "sheets = [ \"z\" , \"-z\" ]\n"
      "basepoint = \"1\"\n");
  CHECK(c.branch.size() == 1);
}

TEST_CASE("fingerprints are stable and distinguish curves") {
  SpectralCurve a1 = fixture("airy.curve");
  SpectralCurve a2 = fixture("airy.curve");
  SpectralCurve e = fixture("eisenstein.curve");
  CHECK(a1.fingerprint == a2.fingerprint);
  CHECK(a1.fingerprint != e.fingerprint);
  CHECK(a1.fingerprint.size() == 16);
  CHECK(a1.fingerprint.find_first_not_of("0123456789abcdef") ==
        std::string::npos);
  CHECK(a1.canonical_text().find("x=z^2") != std::string::npos);
}
