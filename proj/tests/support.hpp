#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "parasync/depend.hpp"
#include "parasync/parser.hpp"
#include "parasync/syncelim.hpp"

// Fixtures, random-program generators, and reference implementations the
// tests use to cross-check the library. The reference code here is written
// against the definitions directly (instance enumeration, exhaustive
// reachability) and deliberately shares no logic with the production
// algorithms.

namespace testsupport {

using namespace parasync;

// ----- fixtures --------------------------------------------------------------

// Four-statement acyclic pipeline: one producer feeding three consumers at
// distances 0, 1, and 2.
inline const char* dag4_src() {
  return "for (i=1; i<n; i++) {\n"
         "  S1: a[i] = b[i-1] + 1;\n"
         "  S2: b[i] = c[i-1] + 2;\n"
         "  S3: e[i] = a[i-1] + b[i] * d[i-2];\n"
         "  S4: d[i] = b[i-2] - 3;\n"
         "}\n";
}

// Three statements forming a dependence cycle; the classic target for
// send/wait synchronization.
inline const char* cycle3_src() {
  return "for (i=1; i<n; i++) {\n"
         "  S1: a[i] = b[i-1] + 1;\n"
         "  S2: b[i] = c[i-1] + 2;\n"
         "  S3: c[i] = b[i-2] + a[i-1];\n"
         "}\n";
}

// Acyclic pair of carried dependences: a forward distance-2 dependence that
// a backward distance-1 relay makes redundant.
inline const char* relay3_src() {
  return "for (i=1; i<n; i++) {\n"
         "  S1: a[i] = 1;\n"
         "  S2: b[i] = c[i-1] + 2;\n"
         "  S3: c[i] = a[i-2];\n"
         "}\n";
}

// relay3 with the relay slowed to distance 2: reachability still covers the
// forward dependence, the distance-1 pattern rule no longer applies.
inline const char* relay3_wide_src() {
  return "for (i=1; i<n; i++) {\n"
         "  S1: a[i] = 1;\n"
         "  S2: b[i] = c[i-2] + 2;\n"
         "  S3: c[i] = a[i-2];\n"
         "}\n";
}

// No dependences at all: every iteration independent.
inline const char* nodeps_src() {
  return "for (i=0; i<n; i++) {\n"
         "  S1: a[i] = b[i] + 1;\n"
         "  S2: c[i] = a[i] * 2;\n"
         "}\n";
}

inline LoopNest dag4() { return parse(dag4_src()).loops.front(); }
inline LoopNest cycle3() { return parse(cycle3_src()).loops.front(); }
inline LoopNest relay3() { return parse(relay3_src()).loops.front(); }
inline LoopNest relay3_wide() { return parse(relay3_wide_src()).loops.front(); }
inline LoopNest nodeps() { return parse(nodeps_src()).loops.front(); }

inline Dependence find_dep(const std::vector<Dependence>& deps,
                           const std::string& array) {
  for (const auto& d : deps)
    if (d.array == array) return d;
  throw std::runtime_error("no dependence on array " + array);
}

inline const Dependence* find_dep(const std::vector<Dependence>& deps,
                                  const std::string& array,
                                  const std::string& source,
                                  const std::string& sink) {
  for (const auto& d : deps)
    if (d.array == array && d.source == source && d.sink == sink) return &d;
  return nullptr;
}

// ----- random programs -------------------------------------------------------

struct Gen {
  std::mt19937_64 eng;

  explicit Gen(std::uint64_t seed) : eng(seed) {}

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(eng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

// Random single loop: 2-5 statements over arrays a..e, subscripts i+c with
// read offsets in [-4, 4]. With vary_lhs, writes may also be offset
// (in [-2, 2]), which produces anti/output dependences in both directions.
inline LoopNest gen_loop(Gen& g, bool vary_lhs) {
  static const char* arrays[] = {"a", "b", "c", "d", "e"};
  const int stmts = g.range(2, 5);
  std::string src = "for (i=1; i<n; i++) {\n";
  for (int s = 1; s <= stmts; ++s) {
    src += "  S" + std::to_string(s) + ": ";
    src += arrays[g.range(0, 4)];
    const int lhs_off = vary_lhs ? g.range(-2, 2) : 0;
    src += "[i";
    if (lhs_off > 0) src += "+" + std::to_string(lhs_off);
    if (lhs_off < 0) src += "-" + std::to_string(-lhs_off);
    src += "] = ";
    const int reads = g.range(1, 3);
    for (int r = 0; r < reads; ++r) {
      if (r > 0) src += std::string(" ") + "+-*"[g.range(0, 2)] + " ";
      if (g.range(0, 5) == 0) {
        src += std::to_string(g.range(1, 9));
      } else {
        const int off = g.range(-4, 4);
        src += arrays[g.range(0, 4)];
        src += "[i";
        if (off > 0) src += "+" + std::to_string(off);
        if (off < 0) src += "-" + std::to_string(-off);
        src += "]";
      }
    }
    src += ";\n";
  }
  src += "}\n";
  return parse(src).loops.front();
}

// ----- reference dependence enumeration --------------------------------------

// (kind, source label, source iteration, sink label, sink iteration, array)
using InstancePair =
    std::tuple<int, std::string, std::int64_t, std::string, std::int64_t,
               std::string>;

// Every ordered pair of accesses to the same cell with at least one write,
// enumerated straight from the sequential execution order. A statement
// instance reads before it writes; pairs within one instance are skipped.
inline std::set<InstancePair> instance_pairs_brute(const LoopNest& loop,
                                                   std::int64_t n) {
  struct Event {
    bool write;
    std::string array;
    std::int64_t addr;
    std::string stmt;
    std::int64_t iter;
  };
  std::vector<Event> events;
  for (std::int64_t i = loop.lower; i < n; ++i) {
    for (const auto& st : loop.statements) {
      for (const auto& r : st.reads())
        events.push_back({false, r.array, i + r.offset, st.label, i});
      events.push_back(
          {true, st.lhs.array, i + st.lhs.offset, st.label, i});
    }
  }
  std::map<std::pair<std::string, std::int64_t>, std::vector<std::size_t>>
      by_addr;
  for (std::size_t k = 0; k < events.size(); ++k)
    by_addr[{events[k].array, events[k].addr}].push_back(k);

  std::set<InstancePair> pairs;
  for (const auto& [addr, idxs] : by_addr) {
    for (std::size_t x = 0; x < idxs.size(); ++x) {
      for (std::size_t y = x + 1; y < idxs.size(); ++y) {
        const Event& e1 = events[idxs[x]];
        const Event& e2 = events[idxs[y]];
        if (!e1.write && !e2.write) continue;
        if (e1.stmt == e2.stmt && e1.iter == e2.iter) continue;
        int kind;
        std::string src = e1.stmt, snk = e2.stmt;
        std::int64_t si = e1.iter, ki = e2.iter;
        if (e1.write && !e2.write)
          kind = static_cast<int>(DepKind::Flow);
        else if (!e1.write && e2.write)
          kind = static_cast<int>(DepKind::Anti);
        else
          kind = static_cast<int>(DepKind::Output);
        pairs.insert({kind, src, si, snk, ki, e1.array});
      }
    }
  }
  return pairs;
}

// The same pair set as the graph's distance-annotated edges predict it.
inline std::set<InstancePair> instance_pairs_predicted(const LoopNest& loop,
                                                       const DepGraph& g,
                                                       std::int64_t n) {
  std::set<InstancePair> pairs;
  for (const auto& e : g.edges)
    for (std::int64_t k = loop.lower; k + e.distance < n; ++k)
      pairs.insert({static_cast<int>(e.kind), e.source, k, e.sink,
                    k + e.distance, e.array});
  return pairs;
}

// ----- reference elimination decider -----------------------------------------

// Mirrors the candidate loop of the windowed reduction but decides each
// candidate with exhaustive full-range reachability instead of the window.
inline ElimResult eliminate_by_full_oracle(const LoopNest& loop,
                                           const std::vector<Dependence>& deps,
                                           std::int64_t n) {
  ElimResult result;
  result.method = ElimMethod::IsdReduction;
  std::vector<Dependence> pool = deps;
  for (const Dependence& cand : detail::candidate_order(loop, deps)) {
    std::vector<Dependence> rest;
    for (const auto& d : pool)
      if (!(d == cand)) rest.push_back(d);
    if (oracle_enforced(loop, rest, cand, n)) {
      result.eliminated.push_back(cand);
      pool = rest;
    } else {
      result.retained.push_back(cand);
    }
  }
  detail::finish(loop, result);
  return result;
}

}  // namespace testsupport
