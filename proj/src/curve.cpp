#include "toprec/curve.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "toprec/error.hpp"
#include "toprec/expr.hpp"

namespace toprec {
namespace {

// ---- description file parsing ----------------------------------------------

struct RawField {
  std::string value;
  std::vector<std::string> list;
  bool is_list = false;
  bool flag = false;
  bool is_flag = false;
  int line = 0;
};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_at(int line, const std::string& what) {
  throw input_error("curve description, line " + std::to_string(line) + ": " +
                    what);
}

// Parse `"..."` starting at pos; returns content, advances pos past the quote.
std::string take_quoted(const std::string& s, size_t& pos, int line) {
  if (pos >= s.size() || s[pos] != '"') fail_at(line, "expected a quoted string");
  size_t end = s.find('"', pos + 1);
  if (end == std::string::npos) fail_at(line, "unterminated string");
  std::string content = s.substr(pos + 1, end - pos - 1);
  pos = end + 1;
  return content;
}

std::map<std::string, RawField> parse_fields(const std::string& text) {
  std::map<std::string, RawField> fields;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (size_t h = raw.find('#'); h != std::string::npos) raw = raw.substr(0, h);
    raw = trim(raw);
    if (raw.empty()) continue;
    size_t eq = raw.find('=');
    if (eq == std::string::npos) fail_at(line, "expected key = value");
    std::string key = trim(raw.substr(0, eq));
    std::string val = trim(raw.substr(eq + 1));
    if (key.empty()) fail_at(line, "missing key before '='");
    if (fields.count(key)) fail_at(line, "duplicate key '" + key + "'");
    RawField f;
    f.line = line;
    if (!val.empty() && val[0] == '"') {
      size_t pos = 0;
      f.value = take_quoted(val, pos, line);
      if (!trim(val.substr(pos)).empty())
        fail_at(line, "trailing content after string value");
    } else if (!val.empty() && val[0] == '[') {
      f.is_list = true;
      size_t pos = 1;
      for (;;) {
        while (pos < val.size() && std::isspace(static_cast<unsigned char>(val[pos]))) ++pos;
        if (pos < val.size() && val[pos] == ']') {
          ++pos;
          break;
        }
        f.list.push_back(take_quoted(val, pos, line));
        while (pos < val.size() && std::isspace(static_cast<unsigned char>(val[pos]))) ++pos;
        if (pos < val.size() && val[pos] == ',') {
          ++pos;
          continue;
        }
        if (pos < val.size() && val[pos] == ']') {
          ++pos;
          break;
        }
        fail_at(line, "expected ',' or ']' in list");
      }
      if (!trim(val.substr(pos)).empty())
        fail_at(line, "trailing content after list value");
    } else if (val == "true" || val == "false") {
      f.is_flag = true;
      f.flag = val == "true";
    } else {
      fail_at(line, "value must be a quoted string, a [list], or true/false");
    }
    fields[key] = std::move(f);
  }
  return fields;
}

std::string strip_spaces(const std::string& s) {
  std::string r;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) r += c;
  return r;
}

// ---- branch-point location --------------------------------------------------

struct Root {
  Scalar r;
  int mult;
};

// Roots (with multiplicity) of a plain polynomial with nonzero constant term.
// Degrees 1 and 2 are solved in the field; higher degrees are accepted only
// as powers of a single linear factor.
std::vector<Root> plain_roots(const Polynomial<Scalar>& p) {
  std::vector<Root> roots;
  int d = p.deg();
  if (d == 0) return roots;
  if (d == 1) {
    roots.push_back({-(p.coeff(0) * p.coeff(1).inverse()), 1});
    return roots;
  }
  if (d == 2) {
    Scalar a = p.coeff(2), b = p.coeff(1), c = p.coeff(0);
    Scalar disc = b * b - Scalar(4) * a * c;
    Scalar half = Scalar(Rat(1, 2));
    if (disc.is_zero()) {
      roots.push_back({-(b * half * a.inverse()), 2});
      return roots;
    }
    auto s = disc.sqrt_in_field();
    if (!s)
      throw input_error(
          "branch-point locations are not in the coefficient field "
          "(irrational roots of dx)");
    Scalar inv2a = (Scalar(2) * a).inverse();
    roots.push_back({(-b + *s) * inv2a, 1});
    roots.push_back({(-b - *s) * inv2a, 1});
    return roots;
  }
  // c * (z - r)^d exactly?
  Scalar lead = p.coeff(d);
  Scalar r = -(p.coeff(d - 1) * (Scalar(d) * lead).inverse());
  Polynomial<Scalar> lin = Polynomial<Scalar>::monomial(1) - Polynomial<Scalar>(r);
  Polynomial<Scalar> pw = Polynomial<Scalar>::one();
  for (int i = 0; i < d; ++i) pw = pw * lin;
  if (pw.scaled(lead) == p) {
    roots.push_back({r, d});
    return roots;
  }
  throw input_error(
      "cannot solve for branch-point locations: dx has a factor of degree " +
      std::to_string(d) + " over the coefficient field");
}

// ---- fingerprint -------------------------------------------------------------

std::string fnv1a_hex(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[size_t(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace

std::string SpectralCurve::canonical_text() const {
  std::ostringstream os;
  os << "field=" << (field_ext ? "Q(w);w^2+w+1=0" : "Q") << "\n";
  os << "x=" << x.str("z") << "\n";
  os << "y=" << y.str("z") << "\n";
  os << "sheets=[";
  for (size_t i = 0; i < sheets.size(); ++i)
    os << (i ? "," : "") << sheets[i].str("z");
  os << "]\n";
  os << "basepoint=" << basepoint.str() << "\n";
  os << "cauchy_type=" << (cauchy_type ? "true" : "false") << "\n";
  return os.str();
}

SpectralCurve load_curve_text(const std::string& text) {
  auto fields = parse_fields(text);
  for (const auto& [key, f] : fields)
    if (key != "field" && key != "x" && key != "y" && key != "sheets" &&
        key != "basepoint" && key != "cauchy_type")
      fail_at(f.line, "unknown key '" + key + "'");
  auto require = [&](const std::string& key) -> const RawField& {
    auto it = fields.find(key);
    if (it == fields.end())
      throw input_error("curve description: missing required key '" + key + "'");
    return it->second;
  };

  SpectralCurve c;

  const RawField& ff = require("field");
  std::string fd = strip_spaces(ff.value);
  if (fd == "Q") {
    c.field_ext = false;
  } else if (fd == "Q(w);w^2+w+1=0") {
    c.field_ext = true;
  } else {
    fail_at(ff.line, "unsupported field declaration '" + ff.value + "'");
  }

  ExprOptions opt;
  opt.allow_w = c.field_ext;

  const RawField& fx = require("x");
  opt.line = fx.line;
  c.xr = parse_expr(fx.value, opt);
  // x must be a Laurent polynomial: in canonical form that means the
  // denominator is a single monomial.
  const auto& xd = c.xr.den();
  if (xd.deg() != xd.val())
    fail_at(fx.line, "x must be a Laurent polynomial in z");
  c.x = c.xr.num().shifted(-xd.val()).scaled(xd.lead().inverse());
  if (c.x.is_constant()) fail_at(fx.line, "x must not be constant");

  const RawField& fy = require("y");
  opt.line = fy.line;
  c.y = parse_expr(fy.value, opt);
  if (c.y.is_zero()) fail_at(fy.line, "y must not be identically zero");
  c.yprime = c.y.derivative();

  const RawField& fs = require("sheets");
  if (!fs.is_list) fail_at(fs.line, "sheets must be a [list] of expressions");
  if (fs.list.empty()) fail_at(fs.line, "sheets must not be empty");
  opt.line = fs.line;
  for (const std::string& s : fs.list) c.sheets.push_back(parse_expr(s, opt));
  if (c.sheets[0] != RatFun::symbol())
    fail_at(fs.line, "the first sheet map must be the identity \"z\"");
  for (size_t i = 1; i < c.sheets.size(); ++i) {
    if (!(c.xr.subst(c.sheets[i]) == c.xr))
      fail_at(fs.line, "sheet map #" + std::to_string(i) + " = \"" +
                           c.sheets[i].str("z") +
                           "\" does not preserve x");
  }

  const RawField& fb = require("basepoint");
  opt.line = fb.line;
  RatFun bp = parse_expr(fb.value, opt);
  if (!bp.is_constant() || !bp.constant().is_rational())
    fail_at(fb.line, "basepoint must be a rational constant");
  c.basepoint = bp.constant();

  if (auto it = fields.find("cauchy_type"); it != fields.end()) {
    if (!it->second.is_flag) fail_at(it->second.line, "cauchy_type must be true or false");
    c.cauchy_type = it->second.flag;
  }
  if (c.cauchy_type && c.nsheets() != 3)
    fail_at(fs.line, "cauchy_type requires exactly three sheets");

  // ---- branch points: finite zeros of dx ------------------------------------
  c.xprime = c.x.derivative();
  if (c.xprime.is_zero())
    throw input_error("curve description: x must not be constant");
  int v = c.xprime.val();
  std::vector<Root> roots;
  if (v > 0) roots.push_back({Scalar(0), v});
  for (Root r : plain_roots(c.xprime.shifted(-c.xprime.val())))
    roots.push_back(r);

  for (const Root& r : roots) {
    if (r.mult > 2)
      throw input_error("unsupported branching number " + std::to_string(r.mult) +
                        " at z = " + r.r.str() +
                        " (only simple and double branch points are supported)");
    BranchPoint b;
    b.a = r.r;
    b.nb = r.mult;
    b.xval = c.x.eval<Scalar>(b.a);
    c.branch.push_back(std::move(b));
  }
  std::sort(c.branch.begin(), c.branch.end(),
            [](const BranchPoint& l, const BranchPoint& r) { return l.a < r.a; });

  // Distinct branch values (no two branch points over the same x).
  for (size_t i = 0; i < c.branch.size(); ++i)
    for (size_t j = i + 1; j < c.branch.size(); ++j)
      if (c.branch[i].xval == c.branch[j].xval)
        throw input_error("branch points z = " + c.branch[i].a.str() +
                          " and z = " + c.branch[j].a.str() +
                          " share the branch value x = " +
                          c.branch[i].xval.str());

  // Behaviour of x at z = infinity: a pole (deg >= 1) projects to x = infinity
  // and is excluded from the branch set; x finite at infinity with a
  // higher-order approach means a branch point this coordinate cannot host.
  if (c.x.deg() <= 0) {
    // order of approach to x(infinity) = the largest negative exponent present
    int top_neg = c.x.val();
    for (int e = -1; e >= c.x.val(); --e)
      if (!c.x.coeff(e).is_zero()) {
        top_neg = e;
        break;
      }
    if (-top_neg >= 2) c.finite_branch_at_infinity = true;
  }

  // ---- per-point validation ---------------------------------------------------
  bool has_double = false;
  for (BranchPoint& b : c.branch) {
    if (b.nb == 2) has_double = true;
    // No cusps: dy must not vanish where dx does.
    if (c.yprime.is_zero() || c.yprime.order_at(b.a) >= 1)
      throw input_error("cusp at z = " + b.a.str() +
                        ": dx and dy vanish simultaneously");
    if (b.nb == 2) {
      if (!c.field_ext)
        throw input_error(
            "double branch point at z = " + b.a.str() +
            " requires the extension field Q(w); w^2+w+1=0 for its deck maps");
      int ord = c.y.order_at(b.a);
      if (ord != -2)
        throw input_error(
            "hard-edge expansion of y at the double branch point z = " +
            b.a.str() + " must start at (z-a)^-2 (found order " +
            std::to_string(ord) + ")");
      // y_m2 = ((z-a)^2 y)(a), finite by the order check above.
      RatFun lin = RatFun::symbol() - RatFun(b.a);
      b.y_m2 = (lin * lin * c.y).eval(b.a);
    }
  }

  // Trace-free condition over the declared sheets.
  if (c.cauchy_type || has_double) {
    RatFun trace;
    for (const RatFun& s : c.sheets) trace += c.y.subst(s);
    if (!trace.is_zero())
      throw input_error(
          "trace-free condition fails: the sheet sum of y is " +
          trace.str("z"));
  }

  // ---- basepoint regularity ---------------------------------------------------
  validate_basepoint(c, c.basepoint);

  // ---- exact deck detection ----------------------------------------------------
  for (BranchPoint& b : c.branch) {
    b.exact_sheet.assign(size_t(b.nb), -1);
    for (int j = 1; j <= b.nb; ++j) {
      Scalar want = b.nb == 1 ? Scalar(-1) : Scalar::theta().pow(j);
      for (int i = 1; i < c.nsheets(); ++i) {
        const RatFun& s = c.sheets[size_t(i)];
        try {
          if (s.eval(b.a) == b.a && s.derivative().eval(b.a) == want) {
            b.exact_sheet[size_t(j - 1)] = i;
            break;
          }
        } catch (const std::domain_error&) {
          // pole of the sheet map at the branch point: not an exact deck
        }
      }
    }
  }

  c.fingerprint = fnv1a_hex(c.canonical_text());
  return c;
}

SpectralCurve load_curve_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open curve file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  SpectralCurve c = load_curve_text(ss.str());
  size_t slash = path.find_last_of('/');
  c.name = slash == std::string::npos ? path : path.substr(slash + 1);
  if (c.name.size() > 6 && c.name.substr(c.name.size() - 6) == ".curve")
    c.name = c.name.substr(0, c.name.size() - 6);
  return c;
}

std::vector<Scalar> fiber_point(const SpectralCurve& c, const Scalar& p) {
  std::vector<Scalar> out;
  out.reserve(c.sheets.size());
  for (const RatFun& s : c.sheets) out.push_back(s.eval(p));
  return out;
}

void validate_basepoint(const SpectralCurve& c, const Scalar& o) {
  auto basepoint_error = [&](const std::string& why) {
    throw input_error("basepoint o = " + o.str() + " " + why);
  };
  Scalar xo;
  try {
    xo = c.xr.eval(o);
  } catch (const std::domain_error&) {
    basepoint_error("is a pole of x");
  }
  for (const BranchPoint& b : c.branch) {
    if (b.a == o) basepoint_error("is a branch point");
    if (b.xval == xo)
      basepoint_error("lies in the fiber over the branch value x = " +
                      b.xval.str());
  }
  std::vector<Scalar> fo;
  try {
    fo = fiber_point(c, o);
  } catch (const std::domain_error&) {
    basepoint_error("is a pole of a sheet map");
  }
  for (size_t i = 0; i < fo.size(); ++i)
    for (size_t j = i + 1; j < fo.size(); ++j)
      if (fo[i] == fo[j])
        basepoint_error("has a degenerate fiber: sheet maps #" +
                        std::to_string(i) + " and #" + std::to_string(j) +
                        " coincide there");
}

Value deck_germ(const SpectralCurve& c, const BranchPoint& bp, int j,
                const EvalCtx& ctx) {
  if (j < 1 || j > bp.nb)
    throw input_error("deck index " + std::to_string(j) +
                      " out of range for branching number " +
                      std::to_string(bp.nb));
  Value tau = unit_series(0);
  Value at = v_add(Value(bp.a), tau);

  if (bp.exact_sheet[size_t(j - 1)] >= 0) {
    const RatFun& s = c.sheets[size_t(bp.exact_sheet[size_t(j - 1)])];
    return v_sub(rf_subst_value(s, at, ctx), Value(bp.a));
  }

  // Normalize x - x(a) to an exact power: find the local coordinate W with
  // x(a + tau) = x(a) + c_M W(tau)^M, M = nb + 1.  In the W-plane the deck
  // maps are the exact rotations W -> mu^j W with mu a primitive M-th root of
  // unity, so theta^j = W^{-1} o (mu^j W).
  int M = bp.nb + 1;
  Value s = v_sub(poly_eval_value(c.x, at, ctx), Value(bp.xval));
  SeriesPtr sp = std::get<SeriesPtr>(s);
  if (series_valuation(sp) != M)
    throw internal_error("branch order of x disagrees with dx at z = " +
                         bp.a.str());
  Value cM = v_coeff(s, 0, M);
  Value u = v_sub(v_mul(series_shift(s, 0, -M), v_inverse(cM, ctx)),
                  Value(Scalar(1)));
  Value W = v_mul(tau, root_unit(u, M, ctx));
  Value Winv = reverse_series(W, ctx);
  Scalar mu = bp.nb == 1 ? Scalar(-1) : Scalar::theta().pow(j);
  Value g = compose_series(Winv, v_mul(Value(mu), W), ctx);

  // Recomposition check: x(a + g(tau)) - x(a + tau) must vanish through the
  // whole computed window.
  Value err = v_sub(poly_eval_value(c.x, v_add(Value(bp.a), g), ctx),
                    poly_eval_value(c.x, at, ctx));
  if (!stored_zero(err))
    throw internal_error("deck germ at z = " + bp.a.str() +
                         " fails the recomposition check");
  return g;
}

}  // namespace toprec
