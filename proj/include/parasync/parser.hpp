#pragma once

#include <cctype>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "parasync/ast.hpp"

// Recursive-descent parser for the .loop surface syntax:
//
//   program := loop+
//   loop    := "for" "(" ["parallel"] IDENT "=" INT ";"
//              IDENT "<" (INT | "n") ";" IDENT "++" ")" "{" item* "}"
//   item    := LABEL ":" ref "=" expr ";"
//            | "send" "(" INT "," idx "," IDENT ")" ";"
//            | "wait" "(" INT "," idx "," IDENT ")" ";"
//   ref     := IDENT "[" idx "]"
//   idx     := IDENT | IDENT "+" INT | IDENT "-" INT
//   expr    := term (("+" | "-") term)*
//   term    := factor ("*" factor)*
//   factor  := INT | ref | "(" expr ")"

namespace parasync {

constexpr std::int64_t kMaxOffset = 1000000;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& what)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                           ": " + what),
        line_(line),
        col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_, col_;
};

namespace detail {

struct Token {
  enum class Kind { Ident, Number, Punct, Eof };
  Kind kind = Kind::Eof;
  std::string text;
  std::int64_t value = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') {
          ++pos_;
          ++col_;
        }
      } else {
        break;
      }
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) return;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Kind::Ident;
      tok_.text = src_.substr(start, pos_ - start);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      tok_.kind = Token::Kind::Number;
      tok_.text = src_.substr(start, pos_ - start);
      errno = 0;
      tok_.value = std::strtoll(tok_.text.c_str(), nullptr, 10);
      if (errno == ERANGE)
        throw ParseError(tok_.line, tok_.col, "integer literal out of range");
    } else {
      tok_.kind = Token::Kind::Punct;
      tok_.text = std::string(1, c);
      ++pos_;
    }
    col_ += static_cast<int>(tok_.text.size());
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program parse_program() {
    Program p;
    while (lex_.peek().kind != Token::Kind::Eof) p.loops.push_back(parse_loop());
    if (p.loops.empty()) fail("expected 'for'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = lex_.peek();
    throw ParseError(t.line, t.col, msg);
  }

  Token expect_punct(const std::string& text) {
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::Punct || t.text != text)
      fail("expected '" + text + "'");
    return lex_.next();
  }

  Token expect_ident() {
    if (lex_.peek().kind != Token::Kind::Ident) fail("expected identifier");
    return lex_.next();
  }

  Token expect_number() {
    if (lex_.peek().kind != Token::Kind::Number) fail("expected integer");
    return lex_.next();
  }

  bool peek_ident(const std::string& text) const {
    return lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == text;
  }

  bool peek_punct(const std::string& text) const {
    return lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == text;
  }

  LoopNest parse_loop() {
    LoopNest loop;
    if (!peek_ident("for")) fail("expected 'for'");
    lex_.next();
    expect_punct("(");
    if (peek_ident("parallel")) {
      lex_.next();
      loop.parallel = true;
    }
    loop.index = expect_ident().text;
    if (is_keyword(loop.index)) fail("loop index must not be a keyword");
    expect_punct("=");
    loop.lower = expect_number().value;
    expect_punct(";");
    Token idx2 = expect_ident();
    if (idx2.text != loop.index)
      throw ParseError(idx2.line, idx2.col, "loop condition must test '" +
                                                loop.index + "'");
    expect_punct("<");
    if (lex_.peek().kind == Token::Kind::Number) {
      Token ub = lex_.next();
      if (ub.value <= loop.lower)
        throw ParseError(ub.line, ub.col,
                         "upper bound must exceed lower bound");
      loop.upper = Bound::lit(ub.value);
    } else {
      Token ub = expect_ident();
      if (ub.text != "n")
        throw ParseError(ub.line, ub.col,
                         "upper bound must be an integer or 'n'");
      loop.upper = Bound::sym();
    }
    expect_punct(";");
    Token idx3 = expect_ident();
    if (idx3.text != loop.index)
      throw ParseError(idx3.line, idx3.col,
                       "increment must update '" + loop.index + "'");
    parse_unit_stride(idx3);
    expect_punct(")");
    expect_punct("{");
    std::set<std::string> labels;
    const Statement* prev_stmt = nullptr;
    std::vector<SyncInstr> pending_waits;
    while (!peek_punct("}")) {
      if (peek_ident("send") || peek_ident("wait")) {
        SyncInstr s = parse_sync(loop.index);
        if (s.op == SyncOp::Send) {
          if (!prev_stmt) fail("send must follow a statement");
          s.anchor_label = prev_stmt->label;
          s.anchor_pos = AnchorPos::After;
          loop.syncs.push_back(std::move(s));
        } else {
          pending_waits.push_back(std::move(s));  // anchor set at next stmt
        }
      } else {
        Statement st = parse_statement(loop.index);
        if (!labels.insert(st.label).second)
          fail("duplicate label '" + st.label + "'");
        for (auto& w : pending_waits) {
          w.anchor_label = st.label;
          w.anchor_pos = AnchorPos::Before;
          loop.syncs.push_back(std::move(w));
        }
        pending_waits.clear();
        loop.statements.push_back(std::move(st));
        prev_stmt = &loop.statements.back();
      }
    }
    if (!pending_waits.empty()) fail("wait must precede a statement");
    Token close = expect_punct("}");
    if (loop.statements.empty())
      throw ParseError(close.line, close.col, "loop body has no statements");
    return loop;
  }

  // Accepts only `i++`; diagnoses `i+=c`, `i--`, `i=i+c` as non-unit stride.
  void parse_unit_stride(const Token& at) {
    if (peek_punct("+")) {
      lex_.next();
      if (peek_punct("+")) {
        lex_.next();
        return;
      }
    }
    throw ParseError(at.line, at.col, "only unit stride (i++) is supported");
  }

  SyncInstr parse_sync(const std::string& index) {
    Token kw = lex_.next();
    SyncInstr s;
    s.op = kw.text == "send" ? SyncOp::Send : SyncOp::Wait;
    expect_punct("(");
    Token reg = expect_number();
    if (reg.value < 0 || reg.value > 1 << 20)
      throw ParseError(reg.line, reg.col, "register out of range");
    s.reg = static_cast<int>(reg.value);
    expect_punct(",");
    s.offset = -parse_index_offset(index);
    expect_punct(",");
    s.var = expect_ident().text;
    expect_punct(")");
    expect_punct(";");
    if (s.op == SyncOp::Send && s.offset != 0)
      throw ParseError(kw.line, kw.col, "send argument must be the loop index");
    return s;
  }

  Statement parse_statement(const std::string& index) {
    Token label = expect_ident();
    if (is_keyword(label.text))
      throw ParseError(label.line, label.col, "label must not be a keyword");
    expect_punct(":");
    Statement st;
    st.label = label.text;
    st.lhs = parse_ref(index);
    expect_punct("=");
    st.rhs = parse_expr(index);
    expect_punct(";");
    return st;
  }

  ExprPtr parse_expr(const std::string& index) {
    ExprPtr e = parse_term(index);
    while (peek_punct("+") || peek_punct("-")) {
      char op = lex_.next().text[0];
      e = Expr::make_bin(op, std::move(e), parse_term(index));
    }
    return e;
  }

  ExprPtr parse_term(const std::string& index) {
    ExprPtr e = parse_factor(index);
    while (peek_punct("*")) {
      lex_.next();
      e = Expr::make_bin('*', std::move(e), parse_factor(index));
    }
    return e;
  }

  ExprPtr parse_factor(const std::string& index) {
    if (lex_.peek().kind == Token::Kind::Number)
      return Expr::make_lit(lex_.next().value);
    if (peek_punct("(")) {
      lex_.next();
      ExprPtr e = parse_expr(index);
      expect_punct(")");
      return e;
    }
    return Expr::make_ref(parse_ref(index));
  }

  ArrayRef parse_ref(const std::string& index) {
    Token name = expect_ident();
    if (is_keyword(name.text))
      throw ParseError(name.line, name.col, "array name must not be a keyword");
    if (!valid_array_name(name.text))
      throw ParseError(name.line, name.col,
                       "array name must match [a-z][a-zA-Z0-9_]*");
    expect_punct("[");
    std::int64_t offset = parse_index_offset(index);
    expect_punct("]");
    return ArrayRef{name.text, offset};
  }

  // Parses `i`, `i+c` or `i-c` and returns the signed offset.
  std::int64_t parse_index_offset(const std::string& index) {
    Token id = expect_ident();
    if (id.text != index)
      throw ParseError(id.line, id.col, "index expression must be " + index +
                                            ", " + index + "+c, or " + index +
                                            "-c");
    std::int64_t sign = 0;
    if (peek_punct("+"))
      sign = 1;
    else if (peek_punct("-"))
      sign = -1;
    else
      return 0;
    lex_.next();
    Token num = expect_number();
    if (num.value > kMaxOffset)
      throw ParseError(num.line, num.col, "offset magnitude exceeds 1000000");
    return sign * num.value;
  }

  static bool is_keyword(const std::string& s) {
    return s == "for" || s == "parallel" || s == "send" || s == "wait";
  }

  static bool valid_array_name(const std::string& s) {
    if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
    for (char c : s)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
        return false;
    return true;
  }

  Lexer lex_;
};

}  // namespace detail

inline Program parse(const std::string& source) {
  return detail::Parser(source).parse_program();
}

}  // namespace parasync
