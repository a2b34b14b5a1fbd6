#include "toprec/expr.hpp"

#include <cctype>
#include <optional>
#include <vector>

#include "toprec/error.hpp"

namespace toprec {
namespace {

enum class Tok { kInt, kW, kZ, kPlus, kMinus, kMul, kDiv, kPow, kLParen, kRParen, kEnd };

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  Lexer(const std::string& s, int line0) : s_(s), line_(line0) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      if (s_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
    int line = line_, col = col_;
    if (pos_ >= s_.size()) return {Tok::kEnd, "", line, col};
    char c = s_[pos_];
    auto one = [&](Tok k) {
      ++pos_;
      ++col_;
      return Token{k, std::string(1, c), line, col};
    };
    switch (c) {
      case '+': return one(Tok::kPlus);
      case '-': return one(Tok::kMinus);
      case '*': return one(Tok::kMul);
      case '/': return one(Tok::kDiv);
      case '^': return one(Tok::kPow);
      case '(': return one(Tok::kLParen);
      case ')': return one(Tok::kRParen);
      case 'w': return one(Tok::kW);
      case 'z': return one(Tok::kZ);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        num += s_[pos_++];
        ++col_;
      }
      return {Tok::kInt, num, line, col};
    }
    throw input_error("parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": unexpected character '" +
                      std::string(1, c) + "'");
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;
  int line_, col_ = 1;
};

class Parser {
 public:
  Parser(const std::string& s, const ExprOptions& opt)
      : lex_(s, opt.line), opt_(opt) {
    advance();
  }

  RatFun parse() {
    RatFun r = expr();
    expect(Tok::kEnd, "end of expression");
    return r;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  [[noreturn]] void fail(const std::string& what) {
    throw input_error("parse error at line " + std::to_string(cur_.line) +
                      ", column " + std::to_string(cur_.col) + ": expected " +
                      what);
  }

  void expect(Tok k, const std::string& what) {
    if (cur_.kind != k) fail(what);
  }

  RatFun expr() {
    RatFun acc = term();
    while (cur_.kind == Tok::kPlus || cur_.kind == Tok::kMinus) {
      bool minus = cur_.kind == Tok::kMinus;
      advance();
      RatFun rhs = term();
      acc = minus ? acc - rhs : acc + rhs;
    }
    return acc;
  }

  RatFun term() {
    RatFun acc = factor();
    while (cur_.kind == Tok::kMul || cur_.kind == Tok::kDiv) {
      bool div = cur_.kind == Tok::kDiv;
      Token at = cur_;
      advance();
      RatFun rhs = factor();
      if (div && rhs.is_zero())
        throw input_error("parse error at line " + std::to_string(at.line) +
                          ", column " + std::to_string(at.col) +
                          ": division by zero");
      acc = div ? acc / rhs : acc * rhs;
    }
    return acc;
  }

  RatFun factor() {
    if (cur_.kind == Tok::kMinus) {
      advance();
      return -factor();
    }
    RatFun base = primary();
    if (cur_.kind == Tok::kPow) {
      advance();
      long e = exponent();
      if (e < 0 && base.is_zero()) fail("nonzero base for negative exponent");
      return rf_pow(base, e);
    }
    return base;
  }

  long exponent() {
    bool neg = false;
    bool paren = false;
    if (cur_.kind == Tok::kLParen) {
      paren = true;
      advance();
    }
    if (cur_.kind == Tok::kMinus) {
      neg = true;
      advance();
    }
    expect(Tok::kInt, "integer exponent");
    long v = std::stol(cur_.text);
    advance();
    if (paren) {
      expect(Tok::kRParen, "')' after exponent");
      advance();
    }
    return neg ? -v : v;
  }

  RatFun primary() {
    switch (cur_.kind) {
      case Tok::kInt: {
        Rat v = parse_rat(cur_.text);
        advance();
        return RatFun(Scalar(v));
      }
      case Tok::kW: {
        if (!opt_.allow_w)
          throw input_error("parse error at line " + std::to_string(cur_.line) +
                            ", column " + std::to_string(cur_.col) +
                            ": generator 'w' used but the field is plain Q");
        advance();
        return RatFun(Scalar::theta());
      }
      case Tok::kZ:
        advance();
        return RatFun::symbol();
      case Tok::kLParen: {
        advance();
        RatFun inner = expr();
        expect(Tok::kRParen, "')'");
        advance();
        return inner;
      }
      default:
        fail("a number, 'w', 'z', or '('");
    }
  }

  Lexer lex_;
  ExprOptions opt_;
  Token cur_;
};

}  // namespace

RatFun rf_pow(const RatFun& base, long e) {
  if (e < 0) return rf_pow(base.inverse(), -e);
  RatFun acc(1), b = base;
  for (; e > 0; e >>= 1) {
    if (e & 1) acc *= b;
    if (e > 1) b *= b;
  }
  return acc;
}

RatFun parse_expr(const std::string& text, const ExprOptions& opt) {
  return Parser(text, opt).parse();
}

}  // namespace toprec
