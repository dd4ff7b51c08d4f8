#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "parasync/ast.hpp"
#include "parasync/depend.hpp"

// Synchronization elimination. A send/wait pair is redundant when program
// order plus the remaining pairs already order every instance of its
// dependence. Two deciders are provided: reachability over a bounded
// iteration-space window (complete for constant distances) and a cheap
// lexical pattern match; eliminate_by_pattern never removes anything
// eliminate_by_reduction would keep. oracle_enforced is the brute-force
// referee over a full iteration space.

namespace parasync {

// Statement instances (statement, iteration) with program-order and
// dependence edges over a finite iteration range [0, width).
struct Isd {
  enum class EdgeKind { ProgramOrder, Dep };
  struct Node {
    int stmt = 0;
    std::int64_t iter = 0;
    friend bool operator==(const Node&, const Node&) = default;
  };
  struct Edge {
    Node from, to;
    EdgeKind kind = EdgeKind::ProgramOrder;
    int dep = -1;  // index into the dependence list for Dep edges
  };

  std::int64_t width = 0;
  std::vector<std::string> stmts;
  std::vector<Edge> edges;
};

inline Isd build_isd(const LoopNest& loop, const std::vector<Dependence>& deps,
                     std::int64_t width) {
  if (width < 1) throw std::invalid_argument("ISD needs at least 1 iteration");
  Isd isd;
  isd.width = width;
  for (const auto& st : loop.statements) isd.stmts.push_back(st.label);
  const int m = static_cast<int>(isd.stmts.size());
  for (std::int64_t k = 0; k < width; ++k)
    for (int s = 0; s + 1 < m; ++s)
      isd.edges.push_back({{s, k}, {s + 1, k}, Isd::EdgeKind::ProgramOrder, -1});
  for (std::size_t d = 0; d < deps.size(); ++d) {
    int src = loop.position_of(deps[d].source);
    int snk = loop.position_of(deps[d].sink);
    for (std::int64_t k = 0; k + deps[d].distance < width; ++k)
      isd.edges.push_back({{src, k},
                           {snk, k + deps[d].distance},
                           Isd::EdgeKind::Dep,
                           static_cast<int>(d)});
  }
  return isd;
}

// Iterations needed for a window that every dependence pattern repeats
// within: the product of the unique prime factors across all distances
// (distance 1 contributes none; empty product is 1), plus one.
inline std::int64_t window_size(const std::vector<std::int64_t>& distances) {
  std::set<std::int64_t> primes;
  for (std::int64_t d : distances) {
    if (d < 1) throw std::invalid_argument("window distances must be >= 1");
    std::int64_t rest = d;
    for (std::int64_t p = 2; p * p <= rest; ++p)
      while (rest % p == 0) {
        primes.insert(p);
        rest /= p;
      }
    if (rest > 1) primes.insert(rest);
  }
  std::int64_t product = 1;
  for (std::int64_t p : primes) product *= p;
  return product + 1;
}

enum class ElimMethod { IsdReduction, Pattern };

struct ElimWitness {
  Dependence dep;  // the eliminated dependence
  // Reduction: instance path source(dep)@0 ... sink(dep)@Δ.
  std::vector<std::pair<std::string, std::int64_t>> path;
  // Pattern: the retained dependence that matched.
  std::optional<Dependence> matched;
};

struct ElimResult {
  ElimMethod method = ElimMethod::IsdReduction;
  std::vector<Dependence> retained;
  std::vector<Dependence> eliminated;
  std::vector<ElimWitness> witnesses;
};

namespace detail {

// Candidates are tried most-expensive-first: descending distance, then
// descending source/sink position and array for a total order.
inline std::vector<Dependence> candidate_order(const LoopNest& loop,
                                               std::vector<Dependence> deps) {
  auto key = [&](const Dependence& d) {
    return std::make_tuple(d.distance, loop.position_of(d.source),
                           loop.position_of(d.sink), d.array);
  };
  std::sort(deps.begin(), deps.end(),
            [&](const Dependence& a, const Dependence& b) {
              return key(b) < key(a);
            });
  return deps;
}

// Shortest instance path source@0 -> sink@Δ over program order plus the
// enforcing dependences, confined to iterations [0, width). Dependence and
// program-order edges never decrease the iteration, so any path between the
// two instances stays inside the window whenever width > Δ.
inline std::optional<std::vector<std::pair<std::string, std::int64_t>>>
find_enforcing_path(const LoopNest& loop, const std::vector<Dependence>& via,
                    const Dependence& target, std::int64_t width) {
  const int m = static_cast<int>(loop.statements.size());
  auto id = [&](int stmt, std::int64_t iter) {
    return iter * m + stmt;
  };
  const std::int64_t total = width * m;
  std::vector<std::int64_t> parent(total, -2);  // -2 unseen, -1 root

  const std::int64_t start = id(loop.position_of(target.source), 0);
  const std::int64_t goal =
      id(loop.position_of(target.sink), target.distance);
  parent[start] = -1;
  std::deque<std::int64_t> queue{start};
  while (!queue.empty() && parent[goal] == -2) {
    const std::int64_t cur = queue.front();
    queue.pop_front();
    const int stmt = static_cast<int>(cur % m);
    const std::int64_t iter = cur / m;
    auto visit = [&](int s2, std::int64_t k2) {
      if (k2 >= width) return;
      const std::int64_t nxt = id(s2, k2);
      if (parent[nxt] != -2) return;
      parent[nxt] = cur;
      queue.push_back(nxt);
    };
    if (stmt + 1 < m) visit(stmt + 1, iter);
    for (const auto& d : via)
      if (loop.position_of(d.source) == stmt)
        visit(loop.position_of(d.sink), iter + d.distance);
  }
  if (parent[goal] == -2) return std::nullopt;

  std::vector<std::pair<std::string, std::int64_t>> path;
  for (std::int64_t cur = goal; cur != -1; cur = parent[cur])
    path.emplace_back(loop.statements[cur % m].label, cur / m);
  std::reverse(path.begin(), path.end());
  return path;
}

inline std::vector<Dependence> canonical(const LoopNest& loop,
                                         std::vector<Dependence> deps) {
  auto key = [&](const Dependence& d) {
    return std::make_tuple(loop.position_of(d.source),
                           loop.position_of(d.sink), d.array, d.distance,
                           static_cast<int>(d.kind));
  };
  std::sort(deps.begin(), deps.end(),
            [&](const Dependence& a, const Dependence& b) {
              return key(a) < key(b);
            });
  return deps;
}

inline void finish(const LoopNest& loop, ElimResult& r) {
  r.retained = canonical(loop, r.retained);
  r.eliminated = canonical(loop, r.eliminated);
  auto key = [&](const Dependence& d) {
    return std::make_tuple(loop.position_of(d.source),
                           loop.position_of(d.sink), d.array, d.distance,
                           static_cast<int>(d.kind));
  };
  std::sort(r.witnesses.begin(), r.witnesses.end(),
            [&](const ElimWitness& a, const ElimWitness& b) {
              return key(a.dep) < key(b.dep);
            });
}

}  // namespace detail

// Transitive-reduction style elimination: a candidate goes when the window
// ISD built from the still-retained dependences already contains a path for
// it. The window is anchored with the candidate's source at iteration 0;
// since edges only move forward in iteration time and distances are
// constant, that single anchored check covers every instance.
inline ElimResult eliminate_by_reduction(const LoopNest& loop,
                                         const std::vector<Dependence>& deps) {
  for (const auto& d : deps)
    if (d.distance < 1)
      throw std::invalid_argument("elimination expects loop-carried deps");
  ElimResult result;
  result.method = ElimMethod::IsdReduction;
  std::vector<Dependence> pool = deps;  // not-yet-eliminated
  for (const Dependence& cand : detail::candidate_order(loop, deps)) {
    std::vector<Dependence> rest;
    std::vector<std::int64_t> distances;
    for (const auto& d : pool) {
      distances.push_back(d.distance);
      if (!(d == cand)) rest.push_back(d);
    }
    const std::int64_t width =
        std::max(window_size(distances), cand.distance + 1);
    auto path = detail::find_enforcing_path(loop, rest, cand, width);
    if (path) {
      result.eliminated.push_back(cand);
      result.witnesses.push_back({cand, *path, std::nullopt});
      pool = rest;
    } else {
      result.retained.push_back(cand);
    }
  }
  detail::finish(loop, result);
  return result;
}

// Lexical pattern match: candidate δe is redundant when a retained δr runs
// lexically backward with |Δ| = 1 and the same distance sign, its source at
// or after δe's source and its sink at or before δe's sink. Program order
// then feeds δe's source into δr's chain, which steps one iteration at a
// time past δe's distance.
inline ElimResult eliminate_by_pattern(const LoopNest& loop,
                                       const std::vector<Dependence>& deps) {
  for (const auto& d : deps)
    if (d.distance < 1)
      throw std::invalid_argument("elimination expects loop-carried deps");
  ElimResult result;
  result.method = ElimMethod::Pattern;
  std::vector<Dependence> pool = deps;
  for (const Dependence& cand : detail::candidate_order(loop, deps)) {
    std::optional<Dependence> match;
    for (const auto& r : detail::canonical(loop, pool)) {
      if (r == cand) continue;
      const bool backward = loop.position_of(r.sink) < loop.position_of(r.source);
      if (loop.position_of(cand.source) <= loop.position_of(r.source) &&
          loop.position_of(r.sink) <= loop.position_of(cand.sink) &&
          backward && r.distance == 1) {
        match = r;
        break;
      }
    }
    if (match) {
      result.eliminated.push_back(cand);
      result.witnesses.push_back({cand, {}, match});
      pool.erase(std::remove(pool.begin(), pool.end(), cand), pool.end());
    } else {
      result.retained.push_back(cand);
    }
  }
  detail::finish(loop, result);
  return result;
}

// Brute-force referee: true iff in the full ISD over n iterations every
// in-range instance of the candidate is reachable through program order and
// the retained dependences alone.
inline bool oracle_enforced(const LoopNest& loop,
                            const std::vector<Dependence>& retained,
                            const Dependence& candidate, std::int64_t n) {
  const int m = static_cast<int>(loop.statements.size());
  const int src = loop.position_of(candidate.source);
  const int snk = loop.position_of(candidate.sink);
  for (std::int64_t k = 0; k + candidate.distance < n; ++k) {
    std::vector<bool> seen(static_cast<std::size_t>(n) * m, false);
    std::deque<std::int64_t> queue{k * m + src};
    seen[k * m + src] = true;
    bool found = false;
    while (!queue.empty() && !found) {
      const std::int64_t cur = queue.front();
      queue.pop_front();
      const int stmt = static_cast<int>(cur % m);
      const std::int64_t iter = cur / m;
      if (stmt == snk && iter == k + candidate.distance) {
        found = true;
        break;
      }
      auto visit = [&](int s2, std::int64_t k2) {
        if (k2 >= n) return;
        const std::int64_t nxt = k2 * m + s2;
        if (seen[nxt]) return;
        seen[nxt] = true;
        queue.push_back(nxt);
      };
      if (stmt + 1 < m) visit(stmt + 1, iter);
      for (const auto& d : retained)
        if (loop.position_of(d.source) == stmt)
          visit(loop.position_of(d.sink), iter + d.distance);
    }
    if (!found) return false;
  }
  return true;
}

// Fig-style rendering: one column per iteration, program order dashed,
// retained dependences solid, eliminated ones dotted red with their witness
// path in bold.
inline std::string to_dot_isd(const Isd& isd, const ElimResult* elim = nullptr) {
  auto node = [&](const Isd::Node& n) {
    return "\"" + isd.stmts[n.stmt] + "@" + std::to_string(n.iter) + "\"";
  };
  std::string out = "digraph isd {\n  rankdir=TB;\n";
  for (std::int64_t k = 0; k < isd.width; ++k) {
    out += "  { rank=same;";
    for (const auto& s : isd.stmts)
      out += " \"" + s + "@" + std::to_string(k) + "\";";
    out += " }\n";
  }
  std::set<std::pair<std::string, std::string>> witness_edges;
  std::set<std::tuple<std::string, std::string, std::int64_t>> eliminated;
  if (elim) {
    for (const auto& w : elim->witnesses) {
      for (std::size_t k = 0; k + 1 < w.path.size(); ++k)
        witness_edges.insert(
            {w.path[k].first + "@" + std::to_string(w.path[k].second),
             w.path[k + 1].first + "@" + std::to_string(w.path[k + 1].second)});
      eliminated.insert({w.dep.source, w.dep.sink, w.dep.distance});
    }
  }
  for (const auto& e : isd.edges) {
    std::string from = isd.stmts[e.from.stmt] + "@" + std::to_string(e.from.iter);
    std::string to = isd.stmts[e.to.stmt] + "@" + std::to_string(e.to.iter);
    std::string attrs;
    if (e.kind == Isd::EdgeKind::ProgramOrder) {
      attrs = "style=dashed, color=gray";
    } else if (eliminated.count({isd.stmts[e.from.stmt], isd.stmts[e.to.stmt],
                                 e.to.iter - e.from.iter})) {
      attrs = "style=dotted, color=red";
    } else {
      attrs = "color=black";
    }
    if (witness_edges.count({from, to})) attrs += ", penwidth=2.0";
    out += "  " + node(e.from) + " -> " + node(e.to) + " [" + attrs + "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace parasync
