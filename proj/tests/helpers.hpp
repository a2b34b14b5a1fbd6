// Shared helpers for the test binaries: fixture loading and terse
// constructors for exact scalars and rational functions.
#pragma once

#include <string>

#include "toprec/curve.hpp"
#include "toprec/expr.hpp"
#include "toprec/scalar.hpp"

namespace toprec_test {

using namespace toprec;

inline std::string curve_path(const std::string& name) {
  return std::string(TOPREC_CURVES_DIR) + "/" + name;
}

inline SpectralCurve fixture(const std::string& name) {
  return load_curve_file(curve_path(name));
}

// Parse an expression over Q(w); tests may freely use 'w'.
inline RatFun rf(const std::string& text) {
  ExprOptions opt;
  opt.allow_w = true;
  return parse_expr(text, opt);
}

inline Scalar sc(const std::string& text) {
  RatFun f = rf(text);
  return f.constant();
}

inline Rat rat(const std::string& text) { return parse_rat(text); }

}  // namespace toprec_test
