// Command-line surface: load a curve file, report its branch-point
// structure, compute correlator differentials exactly, or run identity check
// suites.  All values print exactly (rationals, or a+b*w over the extension
// field); --float adds decimal approximations for human reading only.
//
// Exit codes: 0 success / all checks pass, 1 an identity check failed,
// 2 input or usage error, 3 resource cap exceeded or internal failure.
#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "toprec/curve.hpp"
#include "toprec/error.hpp"
#include "toprec/expr.hpp"
#include "toprec/identities.hpp"
#include "toprec/recursion.hpp"

using namespace toprec;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exact scalar rendering.  Over the extension field the w-component is
// always written, even when zero, so the field of the value is explicit.
std::string fmt_scalar(const Scalar& s, bool field_ext) {
  if (!field_ext) return s.str();
  std::string out = s.a().get_str();
  Rat b = s.b();
  if (b >= 0) {
    out += "+" + b.get_str() + "*w";
  } else {
    Rat nb = -b;
    out += "-" + nb.get_str() + "*w";
  }
  return out;
}

std::string fmt_scalar_float(const Scalar& s) {
  std::string out = std::to_string(s.a().get_d());
  if (s.b() != 0) out += " + " + std::to_string(s.b().get_d()) + "*w";
  return out;
}

// One polynomial as a list of exact terms in the symbol q, constant first.
std::vector<std::string> poly_terms(const Polynomial<Scalar>& p,
                                    bool field_ext) {
  std::vector<std::string> terms;
  if (p.is_zero()) {
    terms.push_back("0");
    return terms;
  }
  for (int e = p.val(); e <= p.deg(); ++e) {
    Scalar c = p.coeff(e);
    if (c.is_zero()) continue;
    std::string t;
    if (e == 0) {
      t = fmt_scalar(c, field_ext);
    } else {
      std::string pow = e == 1 ? "q" : "q^" + std::to_string(e);
      if (c == Scalar(1)) {
        t = pow;
      } else if (c == Scalar(-1)) {
        t = "-" + pow;
      } else {
        std::string cs = fmt_scalar(c, field_ext);
        if (cs.find_first_of("+-", 1) != std::string::npos)
          t = "(" + cs + ")*" + pow;
        else
          t = cs + "*" + pow;
      }
    }
    terms.push_back(t);
  }
  return terms;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += v[i];
  }
  return out;
}

struct Options {
  bool as_json = false;
  bool with_float = false;
};

long elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

json curve_info(const SpectralCurve& c) {
  return json{{"name", c.name}, {"fingerprint", c.fingerprint}};
}

void emit_check_rows(const std::vector<CheckResult>& rows, const Options& opt,
                     json& doc) {
  for (const CheckResult& r : rows) {
    if (opt.as_json) {
      doc["checks"].push_back(json{{"name", r.name},
                                   {"pass", r.pass},
                                   {"skipped", r.skipped},
                                   {"detail", r.detail}});
    } else {
      std::string mark = r.skipped ? "skip" : (r.pass ? "pass" : "FAIL");
      std::cout << "[" << mark << "] " << r.name;
      if (!r.detail.empty()) std::cout << "  -- " << r.detail;
      std::cout << "\n";
    }
  }
}

int cmd_branch_points(const std::string& file, const Options& opt) {
  auto t0 = std::chrono::steady_clock::now();
  SpectralCurve c = load_curve_file(file);
  json doc{{"command", "branch-points"},
           {"curve", curve_info(c)},
           {"results", json::array()},
           {"checks", json::array()},
           {"orders", nullptr},
           {"version", kVersion}};
  if (!opt.as_json) {
    std::cout << "command: branch-points\n";
    std::cout << "curve: " << c.name << "  fingerprint: " << c.fingerprint
              << "\n";
  }
  for (const BranchPoint& bp : c.branch) {
    std::vector<std::string> decks;
    for (int j = 1; j <= bp.nb; ++j) {
      int idx = bp.exact_sheet[size_t(j - 1)];
      if (idx >= 0)
        decks.push_back(c.sheets[size_t(idx)].str("q"));
      else
        decks.push_back("series germ");
    }
    if (opt.as_json) {
      json row{{"a", bp.a.str()},
               {"nb", bp.nb},
               {"x_value", bp.xval.str()},
               {"decks", decks}};
      if (bp.nb == 2) row["y_double_pole"] = bp.y_m2.str();
      doc["results"].push_back(row);
    } else {
      std::cout << "branch point: a=" << bp.a.str() << ", nb=" << bp.nb
                << ", x(a)=" << bp.xval.str();
      for (size_t d = 0; d < decks.size(); ++d)
        std::cout << ", deck" << (d + 1) << ": " << decks[d];
      if (bp.nb == 2)
        std::cout << ", y[-2]=" << bp.y_m2.str();
      std::cout << "\n";
    }
  }
  if (c.finite_branch_at_infinity && !opt.as_json)
    std::cout << "note: x stays finite at z=infinity and the cover ramifies "
                 "there; that point is outside this chart and the recursion "
                 "refuses this curve\n";
  if (c.finite_branch_at_infinity && opt.as_json)
    doc["finite_branch_at_infinity"] = true;
  if (opt.as_json) {
    doc["time_ms"] = elapsed_ms(t0);
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "time: " << elapsed_ms(t0) << " ms\n";
  }
  return 0;
}

int cmd_correlator(const std::string& file, int h, int k,
                   const std::string& at, std::optional<int> order,
                   const Options& opt) {
  auto t0 = std::chrono::steady_clock::now();
  SpectralCurve c = load_curve_file(file);
  std::vector<Scalar> spectators;
  if (!at.empty()) {
    ExprOptions eo;
    eo.allow_w = c.field_ext;
    size_t pos = 0;
    while (pos <= at.size()) {
      size_t comma = at.find(',', pos);
      std::string piece = at.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        spectators.push_back(parse_expr(piece, eo).constant());
      } catch (const std::domain_error&) {
        throw input_error("--at entries must be constants in the curve's "
                          "field; got \"" + piece + "\"");
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (int(spectators.size()) != k - 1)
    throw input_error("--at must supply exactly k-1 = " +
                      std::to_string(k - 1) + " points (got " +
                      std::to_string(spectators.size()) + ")");
  Engine eng(c);
  if (order) {
    eng.start_order = *order;
    if (eng.max_order < *order) eng.max_order = *order;
  }
  RatFun w = eng.correlator_sym(h, spectators);
  std::vector<std::string> num = poly_terms(w.num(), c.field_ext);
  std::vector<std::string> den = poly_terms(w.den(), c.field_ext);

  std::string echo = "correlator --h " + std::to_string(h) + " --k " +
                     std::to_string(k) + (at.empty() ? "" : " --at " + at);
  if (opt.as_json) {
    json doc{{"command", echo},
             {"curve", curve_info(c)},
             {"results", json::array()},
             {"checks", json::array()},
             {"orders",
              {{"start", eng.start_order},
               {"last", eng.last_order()},
               {"cap", eng.max_order}}},
             {"version", kVersion}};
    json row{{"h", h},
             {"k", k},
             {"num", num},
             {"den", den}};
    json atv = json::array();
    for (const Scalar& p : spectators)
      atv.push_back(fmt_scalar(p, c.field_ext));
    row["at"] = atv;
    if (opt.with_float && w.is_zero()) row["approx"] = "0 (non-authoritative)";
    doc["results"].push_back(row);
    doc["time_ms"] = elapsed_ms(t0);
    std::cout << doc.dump(2) << "\n";
    return 0;
  }
  std::cout << "command: " << echo << "\n";
  std::cout << "curve: " << c.name << "  fingerprint: " << c.fingerprint
            << "\n";
  std::cout << "w[h=" << h << ",k=" << k << "](q";
  for (const Scalar& p : spectators)
    std::cout << "; " << fmt_scalar(p, c.field_ext);
  std::cout << ") payload of dq";
  for (int i = 2; i <= k; ++i) std::cout << " dp" << i;
  std::cout << ":\n";
  std::cout << "num: [" << join(num) << "], den: [" << join(den) << "]\n";
  if (opt.with_float) {
    std::cout << "approx (non-authoritative): ";
    if (w.is_zero()) {
      std::cout << "0\n";
    } else {
      // Decimal rendering of the exact coefficients, lowest exponent first.
      std::cout << "num ~ [";
      bool first = true;
      for (int e = w.num().val(); e <= w.num().deg(); ++e) {
        if (w.num().coeff(e).is_zero()) continue;
        if (!first) std::cout << ", ";
        std::cout << fmt_scalar_float(w.num().coeff(e));
        first = false;
      }
      std::cout << "]\n";
    }
  }
  std::cout << "orders: start=" << eng.start_order
            << ", last=" << eng.last_order() << ", cap=" << eng.max_order
            << "\n";
  std::cout << "time: " << elapsed_ms(t0) << " ms\n";
  return 0;
}

int cmd_check(const std::string& file, const std::string& suite, int hmax,
              const Options& opt) {
  auto t0 = std::chrono::steady_clock::now();
  SpectralCurve c = load_curve_file(file);
  Engine eng(c);
  std::vector<CheckResult> rows;
  auto want = [&](const char* s) { return suite == "all" || suite == s; };

  if (want("loop")) {
    for (int h = 1; h <= hmax; ++h) {
      LoopResidual l = loop_residual(eng, h);
      CheckResult r;
      r.name = "loop residual h=" + std::to_string(h);
      r.pass = l.line1_zero && l.r_ok && l.d_ok;
      r.detail = l.detail;
      if (!l.line1_zero) r.detail += "; fiber sum of y nonzero";
      rows.push_back(r);
    }
  }
  if (want("symmetry")) {
    for (int h = 1; h <= hmax; ++h) rows.push_back(check_sheet_sum(eng, h));
    rows.push_back(check_symmetry(eng, 0, 3, 3, 11u));
    rows.push_back(check_symmetry(eng, 1, 2, 3, 13u));
    if (hmax >= 2) rows.push_back(check_symmetry(eng, 2, 2, 2, 17u));
  }
  if (want("dilaton")) {
    rows.push_back(check_two_point_pairing(eng));
    rows.push_back(check_planar_three_point_pairing(eng, 19u));
    rows.push_back(check_dilaton(eng, 1, 1, 23u));
    if (hmax >= 2) {
      rows.push_back(check_dilaton(eng, 2, 1, 29u));
      rows.push_back(check_dilaton(eng, 1, 2, 31u));
    }
  }
  if (want("theta-free"))
    rows.push_back(check_theta_free(eng, 2 * hmax + 3, 5, 37u));
  if (want("hequiv"))
    for (int h = 1; h <= hmax; ++h) rows.push_back(check_homogeneity(eng, h));
  if (want("double-bp")) {
    rows.push_back(check_double_branch_pairing(eng));
    rows.push_back(check_residue_swap(eng));
  }

  json doc{{"command", "check --suite " + suite + " --hmax " +
                           std::to_string(hmax)},
           {"curve", curve_info(c)},
           {"results", json::array()},
           {"checks", json::array()},
           {"orders",
            {{"start", eng.start_order},
             {"last", eng.last_order()},
             {"cap", eng.max_order}}},
           {"version", kVersion}};
  if (!opt.as_json) {
    std::cout << "command: check --suite " << suite << " --hmax " << hmax
              << "\n";
    std::cout << "curve: " << c.name << "  fingerprint: " << c.fingerprint
              << "\n";
  }
  emit_check_rows(rows, opt, doc);
  bool all_pass = true;
  for (const CheckResult& r : rows)
    if (!r.pass && !r.skipped) all_pass = false;
  if (opt.as_json) {
    doc["time_ms"] = elapsed_ms(t0);
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << (all_pass ? "all checks passed" : "CHECK FAILURE") << "\n";
    std::cout << "time: " << elapsed_ms(t0) << " ms\n";
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact topological expansion of genus-zero spectral curves: correlator "
      "differentials, free energies, and identity checks"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help and exit");
  Options opt;
  app.add_flag("--json", opt.as_json, "machine-readable JSON report");
  app.add_flag("--float", opt.with_float,
               "append decimal approximations (non-authoritative)");

  std::string file;
  auto* bp = app.add_subcommand("branch-points",
                                "list branch points with deck maps");
  bp->add_option("file", file, "curve description file")->required();

  auto* co = app.add_subcommand("correlator",
                                "compute a correlator differential exactly");
  co->set_help_flag("--help", "print help and exit");
  int h = 0, k = 1;
  std::string at;
  std::optional<int> order;
  co->add_option("file", file, "curve description file")->required();
  co->add_option("--h", h, "genus weight h >= 0")
      ->required()
      ->check(CLI::Range(0, 16));
  co->add_option("--k", k, "slot count k >= 1")
      ->required()
      ->check(CLI::Range(1, 16));
  co->add_option("--at", at,
                 "comma-separated spectator points p2,...,pk (k-1 values)");
  co->add_option("--order", order, "starting truncation order")
      ->check(CLI::Range(4, 1 << 20));

  auto* ck = app.add_subcommand("check", "run exact identity suites");
  std::string suite = "all";
  int hmax = 2;
  ck->add_option("file", file, "curve description file")->required();
  ck->add_option("--suite", suite, "which suite to run")
      ->check(CLI::IsMember({"all", "loop", "symmetry", "dilaton",
                             "theta-free", "hequiv", "double-bp"}));
  ck->add_option("--hmax", hmax, "largest genus weight to check")
      ->check(CLI::Range(1, 4));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("branch-points")) return cmd_branch_points(file, opt);
    if (app.got_subcommand("correlator"))
      return cmd_correlator(file, h, k, at, order, opt);
    return cmd_check(file, suite, hmax, opt);
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrKind::kInput:
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      case ErrKind::kResource:
        std::cerr << "resource limit: " << e.what() << "\n";
        return 3;
      case ErrKind::kInternal:
      default:
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
