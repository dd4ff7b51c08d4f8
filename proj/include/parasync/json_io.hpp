#pragma once

#include <string>

#include "json.hpp"
#include "parasync/ast.hpp"
#include "parasync/depend.hpp"
#include "parasync/restructure.hpp"
#include "parasync/simverify.hpp"
#include "parasync/syncelim.hpp"
#include "parasync/syncgen.hpp"

// JSON views of every pipeline artifact. Keys are emitted in sorted order
// and integer-keyed maps as sorted pair lists, so serialization is
// byte-stable across runs and platforms.

namespace parasync {

inline nlohmann::json to_json(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Lit:
      return {{"lit", e->lit}};
    case Expr::Kind::Ref:
      return {{"ref", {{"array", e->ref.array}, {"offset", e->ref.offset}}}};
    case Expr::Kind::Bin:
      return {{"op", std::string(1, e->op)},
              {"lhs", to_json(e->lhs)},
              {"rhs", to_json(e->rhs)}};
  }
  return nullptr;
}

inline void to_json(nlohmann::json& j, const ArrayRef& r) {
  j = {{"array", r.array}, {"offset", r.offset}};
}

inline void to_json(nlohmann::json& j, const Statement& s) {
  j = {{"label", s.label}, {"lhs", s.lhs}, {"rhs", to_json(s.rhs)}};
}

inline void to_json(nlohmann::json& j, const SyncInstr& s) {
  j = {{"op", s.op == SyncOp::Send ? "send" : "wait"},
       {"reg", s.reg},
       {"offset", s.offset},
       {"var", s.var},
       {"anchor",
        {{"label", s.anchor_label},
         {"pos", s.anchor_pos == AnchorPos::Before ? "before" : "after"}}}};
}

inline void to_json(nlohmann::json& j, const LoopNest& l) {
  j = {{"index", l.index},
       {"lower", l.lower},
       {"upper", l.upper.symbolic ? nlohmann::json("n")
                                  : nlohmann::json(l.upper.value)},
       {"parallel", l.parallel},
       {"statements", l.statements},
       {"syncs", l.syncs}};
}

inline void to_json(nlohmann::json& j, const Program& p) {
  j = {{"loops", p.loops}};
}

inline void to_json(nlohmann::json& j, const Dependence& d) {
  j = {{"kind", kind_name(d.kind)},
       {"source", d.source},
       {"sink", d.sink},
       {"array", d.array},
       {"distance", d.distance},
       {"lexbackward", d.lexbackward}};
}

inline void to_json(nlohmann::json& j, const DepGraph& g) {
  j = {{"nodes", g.nodes}, {"edges", g.edges}};
}

inline void to_json(nlohmann::json& j, const SccPartition& p) {
  j = {{"components", p.components}, {"is_cyclic", p.is_cyclic}};
}

inline void to_json(nlohmann::json& j, const FissionGroup& g) {
  j = {{"statements", g.statements}, {"parallel", g.parallel}};
}

inline void to_json(nlohmann::json& j, const FissionPlan& p) {
  j = {{"groups", p.groups}};
}

inline void to_json(nlohmann::json& j, const SyncProgram& sp) {
  // deps[r] is the dependence bound to register r.
  j = {{"loop", sp.loop}, {"deps", sp.deps}};
}

inline void to_json(nlohmann::json& j, const ElimWitness& w) {
  j = {{"dep", w.dep}};
  if (!w.path.empty()) {
    nlohmann::json path = nlohmann::json::array();
    for (const auto& [stmt, iter] : w.path) path.push_back({stmt, iter});
    j["path"] = path;
  }
  if (w.matched) j["matched"] = *w.matched;
}

inline void to_json(nlohmann::json& j, const ElimResult& r) {
  j = {{"method", r.method == ElimMethod::IsdReduction ? "isd" : "pattern"},
       {"retained", r.retained},
       {"eliminated", r.eliminated},
       {"witnesses", r.witnesses}};
}

inline void to_json(nlohmann::json& j, const Memory& m) {
  j = nlohmann::json::object();
  for (const auto& [name, cells] : m.arrays) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [idx, value] : cells) list.push_back({idx, value});
    j[name] = list;
  }
}

inline void to_json(nlohmann::json& j, const WriteTag& t) {
  j = {{"stmt", t.stmt}, {"iter", t.iter}};
}

inline void to_json(nlohmann::json& j, const Violation& v) {
  j = {{"reader", {{"stmt", v.reader_stmt}, {"iter", v.reader_iter}}},
       {"array", v.array},
       {"index", v.index},
       {"expected", v.expected},
       {"observed", v.observed}};
}

inline void to_json(nlohmann::json& j, const SimReport& r) {
  j = {{"matched_oracle", r.matched_oracle},
       {"deadlocked", r.deadlocked},
       {"blocked_threads", r.blocked_threads},
       {"steps", r.steps},
       {"violations", r.violations},
       {"final", r.final_memory}};
  if (!r.trace.empty()) j["trace"] = r.trace;
}

inline void to_json(nlohmann::json& j, const SweepFailure& f) {
  j = {{"threads", f.threads}, {"seed", f.seed}, {"report", f.report}};
}

inline void to_json(nlohmann::json& j, const SweepReport& r) {
  j = {{"total", r.total},
       {"passed", r.passed},
       {"failed", r.failed},
       {"deadlocks", r.deadlocks}};
  if (r.first_failure)
    j["first_failure"] = *r.first_failure;
  else
    j["first_failure"] = nullptr;
}

// Canonical file form: two-space indent, trailing newline.
inline std::string dumps(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace parasync
