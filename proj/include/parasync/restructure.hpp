#pragma once

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "parasync/ast.hpp"
#include "parasync/depend.hpp"

// Loop restructuring for parallelism: contract dependence cycles into
// strongly connected components, topologically order the contracted DAG so
// every inter-component dependence becomes lexically forward, optionally
// merge independent components that read common data, then split the loop
// so each group becomes its own (parallel where possible) loop.

namespace parasync {

struct SccPartition {
  // Each component lists its members in original statement order; the
  // component sequence is a topological order of the contracted DAG.
  std::vector<std::vector<std::string>> components;
  std::vector<bool> is_cyclic;
};

struct FissionGroup {
  std::vector<std::string> statements;
  bool parallel = true;
};

struct FissionPlan {
  std::vector<FissionGroup> groups;
};

namespace detail {

inline std::vector<std::vector<int>> adjacency(const DepGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<std::set<int>> adj(n);
  for (const auto& e : g.edges) {
    int u = g.position_of(e.source);
    int v = g.position_of(e.sink);
    if (u != v) adj[u].insert(v);
  }
  std::vector<std::vector<int>> out(n);
  for (int u = 0; u < n; ++u) out[u].assign(adj[u].begin(), adj[u].end());
  return out;
}

struct Tarjan {
  const std::vector<std::vector<int>>& adj;
  std::vector<int> index, low, comp;
  std::vector<bool> on_stack;
  std::vector<int> stack;
  int next_index = 0;
  int comp_count = 0;

  explicit Tarjan(const std::vector<std::vector<int>>& a)
      : adj(a),
        index(a.size(), -1),
        low(a.size(), 0),
        comp(a.size(), -1),
        on_stack(a.size(), false) {}

  void run() {
    for (int v = 0; v < static_cast<int>(adj.size()); ++v)
      if (index[v] < 0) strongconnect(v);
  }

  void strongconnect(int v) {
    index[v] = low[v] = next_index++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : adj[v]) {
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      while (true) {
        int w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comp_count;
        if (w == v) break;
      }
      ++comp_count;
    }
  }
};

}  // namespace detail

// Maximal strongly connected components of the dependence graph, ordered
// topologically; ties broken by the smallest original statement position in
// each component, which keeps the result stable with respect to source order.
inline SccPartition scc(const DepGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  auto adj = detail::adjacency(g);
  detail::Tarjan t(adj);
  t.run();

  std::vector<std::vector<int>> members(t.comp_count);
  for (int v = 0; v < n; ++v) members[t.comp[v]].push_back(v);
  for (auto& m : members) std::sort(m.begin(), m.end());

  // Kahn's algorithm over the contracted DAG, min-heap on the smallest
  // member position so independent components keep source order.
  std::vector<std::set<int>> cadj(t.comp_count);
  std::vector<int> indeg(t.comp_count, 0);
  for (int u = 0; u < n; ++u)
    for (int v : adj[u])
      if (t.comp[u] != t.comp[v] && cadj[t.comp[u]].insert(t.comp[v]).second)
        ++indeg[t.comp[v]];

  using Item = std::pair<int, int>;  // (min member position, component id)
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> ready;
  for (int c = 0; c < t.comp_count; ++c)
    if (indeg[c] == 0) ready.push({members[c].front(), c});

  std::vector<bool> self_loop(t.comp_count, false);
  for (const auto& e : g.edges)
    if (e.source == e.sink) self_loop[t.comp[g.position_of(e.source)]] = true;

  SccPartition p;
  while (!ready.empty()) {
    int c = ready.top().second;
    ready.pop();
    std::vector<std::string> labels;
    for (int v : members[c]) labels.push_back(g.nodes[v]);
    p.components.push_back(std::move(labels));
    p.is_cyclic.push_back(members[c].size() > 1 || self_loop[c]);
    for (int d : cadj[c])
      if (--indeg[d] == 0) ready.push({members[d].front(), d});
  }
  return p;
}

// Flattened statement order: components in partition order, members in
// original order. Every inter-component dependence ends up lexically forward.
inline std::vector<std::string> toposort(const DepGraph& g,
                                         const SccPartition& p) {
  (void)g;
  std::vector<std::string> order;
  for (const auto& c : p.components)
    for (const auto& s : c) order.push_back(s);
  return order;
}

namespace detail {

inline bool has_cross_edge(const DepGraph& g,
                           const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  auto in = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  for (const auto& e : g.edges) {
    if (in(a, e.source) && in(b, e.sink)) return true;
    if (in(b, e.source) && in(a, e.sink)) return true;
  }
  return false;
}

inline std::set<std::string> read_arrays(const LoopNest& loop,
                                         const std::vector<std::string>& grp) {
  std::set<std::string> out;
  for (const auto& label : grp) {
    int pos = loop.position_of(label);
    if (pos < 0) continue;
    for (const auto& r : loop.statements[pos].reads()) out.insert(r.array);
  }
  return out;
}

inline bool carried_inside(const DepGraph& g,
                           const std::vector<std::string>& grp) {
  auto in = [&](const std::string& s) {
    return std::find(grp.begin(), grp.end(), s) != grp.end();
  };
  for (const auto& e : g.edges)
    if (e.distance >= 1 && in(e.source) && in(e.sink)) return true;
  return false;
}

}  // namespace detail

// One group per component, no merging; a group runs parallel iff it carries
// no cross-iteration dependence internally.
inline FissionPlan plan_from_components(const DepGraph& g,
                                        const SccPartition& p) {
  FissionPlan plan;
  for (const auto& c : p.components)
    plan.groups.push_back({c, !detail::carried_inside(g, c)});
  return plan;
}

// Greedy left-to-right merge of order-adjacent component groups that have no
// dependence between them in either direction and read at least one common
// array; a data-reuse heuristic, not an optimal grouping.
inline FissionPlan group_for_locality(const LoopNest& loop, const DepGraph& g,
                                      const SccPartition& p) {
  FissionPlan plan;
  for (const auto& c : p.components) {
    bool merged = false;
    if (!plan.groups.empty()) {
      auto& prev = plan.groups.back().statements;
      auto prev_reads = detail::read_arrays(loop, prev);
      auto cur_reads = detail::read_arrays(loop, c);
      bool common = std::any_of(cur_reads.begin(), cur_reads.end(),
                                [&](const std::string& a) {
                                  return prev_reads.count(a) > 0;
                                });
      if (common && !detail::has_cross_edge(g, prev, c)) {
        prev.insert(prev.end(), c.begin(), c.end());
        merged = true;
      }
    }
    if (!merged) plan.groups.push_back({c, true});
  }
  for (auto& grp : plan.groups)
    grp.parallel = !detail::carried_inside(g, grp.statements);
  return plan;
}

// Splits a single-loop program into one loop per group, in plan order.
// Statement text is untouched; only grouping and the parallel flag change.
inline Program fission(const Program& p, const FissionPlan& plan) {
  if (p.loops.size() != 1)
    throw std::invalid_argument("fission expects a single-loop program");
  const LoopNest& src = p.loops.front();
  Program out;
  for (const auto& grp : plan.groups) {
    LoopNest ln;
    ln.index = src.index;
    ln.lower = src.lower;
    ln.upper = src.upper;
    ln.parallel = grp.parallel;
    for (const auto& label : grp.statements) {
      int pos = src.position_of(label);
      if (pos < 0)
        throw std::invalid_argument("fission plan names unknown statement " +
                                    label);
      ln.statements.push_back(src.statements[pos]);
    }
    out.loops.push_back(std::move(ln));
  }
  return out;
}

}  // namespace parasync
