#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

// IR for a tiny normalized-loop language: a program is a sequence of
// single-level loops; each statement assigns one array element indexed by
// the loop variable plus a constant offset. Values are immutable after
// construction and safe to share across threads.

namespace parasync {

struct ArrayRef {
  std::string array;
  std::int64_t offset = 0;  // subscript is loop index + offset

  friend bool operator==(const ArrayRef&, const ArrayRef&) = default;
};

// Expression tree over array reads, integer literals and {+, -, *}.
// Nodes are immutable; children are shared.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Lit, Ref, Bin };

  Kind kind = Kind::Lit;
  std::int64_t lit = 0;  // Kind::Lit
  ArrayRef ref;          // Kind::Ref
  char op = '+';         // Kind::Bin
  ExprPtr lhs, rhs;      // Kind::Bin

  static ExprPtr make_lit(std::int64_t v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Lit;
    e->lit = v;
    return e;
  }
  static ExprPtr make_ref(ArrayRef r) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Ref;
    e->ref = std::move(r);
    return e;
  }
  static ExprPtr make_bin(char op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Bin;
    e->op = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
  }
};

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::Lit: return a->lit == b->lit;
    case Expr::Kind::Ref: return a->ref == b->ref;
    case Expr::Kind::Bin:
      return a->op == b->op && expr_equal(a->lhs, b->lhs) &&
             expr_equal(a->rhs, b->rhs);
  }
  return false;
}

// Collects array reads in left-to-right leaf order (duplicates kept).
inline void collect_reads(const ExprPtr& e, std::vector<ArrayRef>& out) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::Lit: return;
    case Expr::Kind::Ref: out.push_back(e->ref); return;
    case Expr::Kind::Bin:
      collect_reads(e->lhs, out);
      collect_reads(e->rhs, out);
      return;
  }
}

struct Statement {
  std::string label;  // unique within a loop, e.g. "S1"
  ArrayRef lhs;
  ExprPtr rhs;

  std::vector<ArrayRef> reads() const {
    std::vector<ArrayRef> out;
    collect_reads(rhs, out);
    return out;
  }

  friend bool operator==(const Statement& a, const Statement& b) {
    return a.label == b.label && a.lhs == b.lhs && expr_equal(a.rhs, b.rhs);
  }
};

// Upper bound: either a concrete integer or the symbol `n`, bound later.
struct Bound {
  bool symbolic = false;
  std::int64_t value = 0;

  static Bound sym() { return Bound{true, 0}; }
  static Bound lit(std::int64_t v) { return Bound{false, v}; }

  friend bool operator==(const Bound&, const Bound&) = default;
};

enum class SyncOp { Send, Wait };
enum class AnchorPos { Before, After };

// One producer/consumer synchronization instruction.
// Printed form: send(reg, i, var) / wait(reg, i-offset, var).
// A send always carries offset 0.
struct SyncInstr {
  SyncOp op = SyncOp::Send;
  int reg = 0;
  std::int64_t offset = 0;   // argument is loop index minus offset
  std::string var;           // annotation only, not consulted at run time
  std::string anchor_label;  // statement this instruction attaches to
  AnchorPos anchor_pos = AnchorPos::After;

  friend bool operator==(const SyncInstr&, const SyncInstr&) = default;
};

struct LoopNest {
  std::string index = "i";
  std::int64_t lower = 0;
  Bound upper;
  bool parallel = false;
  std::vector<Statement> statements;
  // Kept in loop-body order: for each statement, its Before waits precede
  // it and its After sends follow it.
  std::vector<SyncInstr> syncs;

  int position_of(const std::string& label) const {
    for (std::size_t k = 0; k < statements.size(); ++k)
      if (statements[k].label == label) return static_cast<int>(k);
    return -1;
  }

  friend bool operator==(const LoopNest&, const LoopNest&) = default;
};

struct Program {
  std::vector<LoopNest> loops;

  friend bool operator==(const Program&, const Program&) = default;
};

// Replaces every symbolic upper bound with the concrete value n.
inline Program bind_upper(Program p, std::int64_t n) {
  for (auto& loop : p.loops)
    if (loop.upper.symbolic) loop.upper = Bound::lit(n);
  return p;
}

}  // namespace parasync
