#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "parasync/ast.hpp"

// Cross-iteration and loop-independent data dependences with constant
// distances. Subscripts are affine in the loop index (i + c), so every
// dependence test is exact; no approximation is involved.

namespace parasync {

enum class DepKind { Flow, Anti, Output };

inline const char* kind_name(DepKind k) {
  switch (k) {
    case DepKind::Flow: return "FLOW";
    case DepKind::Anti: return "ANTI";
    case DepKind::Output: return "OUTPUT";
  }
  return "?";
}

inline char kind_glyph(DepKind k) {
  switch (k) {
    case DepKind::Flow: return 'f';
    case DepKind::Anti: return 'a';
    case DepKind::Output: return 'o';
  }
  return '?';
}

struct Dependence {
  DepKind kind = DepKind::Flow;
  std::string source;  // statement label executing first
  std::string sink;    // statement label executing later
  std::string array;
  std::int64_t distance = 0;  // iteration gap, always >= 0
  bool lexbackward = false;   // sink precedes source in statement order

  friend bool operator==(const Dependence&, const Dependence&) = default;
};

struct DepGraph {
  std::vector<std::string> nodes;  // statement labels in source order
  std::vector<Dependence> edges;

  int position_of(const std::string& label) const {
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k] == label) return static_cast<int>(k);
    return -1;
  }
};

namespace detail {

// Canonical edge order: (source position, sink position, array, distance, kind).
struct DepLess {
  const DepGraph* g;
  bool operator()(const Dependence& a, const Dependence& b) const {
    auto key = [this](const Dependence& d) {
      return std::make_tuple(g->position_of(d.source), g->position_of(d.sink),
                             d.array, d.distance, static_cast<int>(d.kind));
    };
    return key(a) < key(b);
  }
};

}  // namespace detail

inline void canonicalize(DepGraph& g) {
  std::sort(g.edges.begin(), g.edges.end(), detail::DepLess{&g});
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

// Builds the statement-level dependence graph of one loop.
//
// For a write of array a at offset cw by Sx and a read at offset cr by Sy,
// the instances touching the same address are (Sx, k) and (Sy, k + d) with
// d = cw - cr:
//   d > 0  -> flow  Sx -> Sy, distance d
//   d == 0 -> flow  Sx -> Sy at distance 0 when Sx precedes Sy, else
//             anti  Sy -> Sx at distance 0; a statement's reads happen
//             before its own write, so x == y carries nothing
//   d < 0  -> anti  Sy -> Sx, distance -d
// Write/write pairs produce output dependences analogously.
inline DepGraph analyze(const LoopNest& loop) {
  DepGraph g;
  for (const auto& st : loop.statements) g.nodes.push_back(st.label);

  struct Access {
    int stmt;
    std::int64_t offset;
  };
  // array -> accesses, deduplicated per (statement, offset)
  auto gather = [&](bool writes) {
    std::vector<std::pair<std::string, Access>> out;
    std::set<std::tuple<std::string, int, std::int64_t>> seen;
    for (std::size_t s = 0; s < loop.statements.size(); ++s) {
      const auto& st = loop.statements[s];
      std::vector<ArrayRef> refs =
          writes ? std::vector<ArrayRef>{st.lhs} : st.reads();
      for (const auto& r : refs)
        if (seen.insert({r.array, static_cast<int>(s), r.offset}).second)
          out.push_back({r.array, {static_cast<int>(s), r.offset}});
    }
    return out;
  };
  auto writes = gather(true);
  auto reads = gather(false);

  auto add = [&](DepKind kind, int src, int snk, const std::string& array,
                 std::int64_t dist) {
    g.edges.push_back(Dependence{kind, g.nodes[src], g.nodes[snk], array, dist,
                                 snk < src});
  };

  for (const auto& [warr, w] : writes) {
    for (const auto& [rarr, r] : reads) {
      if (warr != rarr) continue;
      std::int64_t d = w.offset - r.offset;
      if (d > 0) {
        add(DepKind::Flow, w.stmt, r.stmt, warr, d);
      } else if (d == 0) {
        if (w.stmt < r.stmt)
          add(DepKind::Flow, w.stmt, r.stmt, warr, 0);
        else if (r.stmt < w.stmt)
          add(DepKind::Anti, r.stmt, w.stmt, warr, 0);
      } else {
        add(DepKind::Anti, r.stmt, w.stmt, warr, -d);
      }
    }
    for (const auto& [warr2, w2] : writes) {
      if (warr != warr2) continue;
      std::int64_t d = w.offset - w2.offset;
      if (d > 0)
        add(DepKind::Output, w.stmt, w2.stmt, warr, d);
      else if (d == 0 && w.stmt < w2.stmt)
        add(DepKind::Output, w.stmt, w2.stmt, warr, 0);
    }
  }
  canonicalize(g);
  return g;
}

// Loop-carried subset (distance >= 1), the edges synchronization cares about.
inline std::vector<Dependence> carried_edges(const DepGraph& g) {
  std::vector<Dependence> out;
  for (const auto& e : g.edges)
    if (e.distance >= 1) out.push_back(e);
  return out;
}

inline std::string to_dot(const DepGraph& g) {
  std::string out = "digraph depgraph {\n  rankdir=LR;\n";
  for (const auto& n : g.nodes) out += "  \"" + n + "\";\n";
  for (const auto& e : g.edges) {
    out += "  \"" + e.source + "\" -> \"" + e.sink + "\" [label=\"";
    out += kind_glyph(e.kind);
    out += " Δ=" + std::to_string(e.distance) + " (" + e.array + ")\"";
    if (e.kind == DepKind::Anti) out += ", color=orange";
    if (e.kind == DepKind::Output) out += ", color=blue";
    out += "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace parasync
