// Expression grammar for curve files: rationals "p/q", the extension
// generator "w", the uniformizer "z", operators + - * / ^ with integer
// exponents (negative allowed), and parentheses.  Parsing reports line and
// column on error; evaluation lands directly in RationalFunction<Scalar>.
#pragma once

#include <string>

#include "toprec/ratfun.hpp"
#include "toprec/scalar.hpp"

namespace toprec {

struct ExprOptions {
  bool allow_w = false;  // extension generator admitted only over Q(w)
  int line = 1;          // reported position offset for file-based parses
};

// Parse a single expression; throws Error(kInput) with line/column context.
RatFun parse_expr(const std::string& text, const ExprOptions& opt);

// Integer power of a rational function (negative exponents invert).
RatFun rf_pow(const RatFun& base, long e);

}  // namespace toprec
