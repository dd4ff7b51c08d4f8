#pragma once

#include <string>

#include "parasync/ast.hpp"

// Canonical pretty-printer. parse(print(p)) == p for any well-formed
// Program whose syncs are kept in loop-body order.

namespace parasync {

namespace detail {

inline std::string index_expr(const std::string& index, std::int64_t offset) {
  if (offset == 0) return index;
  if (offset > 0) return index + "+" + std::to_string(offset);
  return index + "-" + std::to_string(-offset);
}

inline int precedence(char op) { return op == '*' ? 2 : 1; }

inline void print_expr(const ExprPtr& e, const std::string& index,
                       std::string& out, int parent_prec, bool right_child) {
  switch (e->kind) {
    case Expr::Kind::Lit:
      out += std::to_string(e->lit);
      return;
    case Expr::Kind::Ref:
      out += e->ref.array + "[" + index_expr(index, e->ref.offset) + "]";
      return;
    case Expr::Kind::Bin: {
      int prec = precedence(e->op);
      // All operators are left-associative; a right child at equal
      // precedence only reparses identically when parenthesized.
      bool parens = prec < parent_prec || (right_child && prec == parent_prec);
      if (parens) out += "(";
      print_expr(e->lhs, index, out, prec, false);
      out += " ";
      out += e->op;
      out += " ";
      print_expr(e->rhs, index, out, prec, true);
      if (parens) out += ")";
      return;
    }
  }
}

inline std::string sync_text(const SyncInstr& s, const std::string& index) {
  std::string out = s.op == SyncOp::Send ? "send(" : "wait(";
  out += std::to_string(s.reg) + ", " + index_expr(index, -s.offset) + ", " +
         s.var + ")";
  return out;
}

}  // namespace detail

inline std::string print_expr(const ExprPtr& e, const std::string& index) {
  std::string out;
  detail::print_expr(e, index, out, 0, false);
  return out;
}

inline std::string print(const Statement& s, const std::string& index) {
  return s.label + ": " + s.lhs.array + "[" +
         detail::index_expr(index, s.lhs.offset) + "] = " +
         print_expr(s.rhs, index) + ";";
}

inline std::string print(const LoopNest& loop) {
  std::string out = "for (";
  if (loop.parallel) out += "parallel ";
  out += loop.index + "=" + std::to_string(loop.lower) + "; " + loop.index +
         "<" +
         (loop.upper.symbolic ? std::string("n")
                              : std::to_string(loop.upper.value)) +
         "; " + loop.index + "++) {\n";
  for (const auto& st : loop.statements) {
    for (const auto& s : loop.syncs)
      if (s.anchor_label == st.label && s.anchor_pos == AnchorPos::Before)
        out += "  " + detail::sync_text(s, loop.index) + ";\n";
    out += "  " + print(st, loop.index) + "\n";
    for (const auto& s : loop.syncs)
      if (s.anchor_label == st.label && s.anchor_pos == AnchorPos::After)
        out += "  " + detail::sync_text(s, loop.index) + ";\n";
  }
  out += "}\n";
  return out;
}

inline std::string print(const Program& p) {
  std::string out;
  for (std::size_t k = 0; k < p.loops.size(); ++k) {
    if (k > 0) out += "\n";
    out += print(p.loops[k]);
  }
  return out;
}

}  // namespace parasync
