#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "parasync/ast.hpp"
#include "parasync/depend.hpp"

// Producer/consumer synchronization insertion. Every loop-carried dependence
// gets a private register and one send/wait pair: the send publishes the
// current iteration number right after the dependence source, the wait blocks
// right before the sink until iteration i-Δ has been published.

namespace parasync {

struct SyncProgram {
  LoopNest loop;                  // body with sync instructions woven in
  std::vector<Dependence> deps;   // synchronized dependences; index == register

  int register_of(const Dependence& d) const {
    for (std::size_t r = 0; r < deps.size(); ++r)
      if (deps[r] == d) return static_cast<int>(r);
    return -1;
  }
};

// Register allocation: 0..k-1 in ascending (source position, sink position,
// array) order, extended by (distance, kind) so the order is total.
inline std::vector<Dependence> assign_registers(const LoopNest& loop,
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

// Weaves one send/wait pair per dependence into the loop body. Processing
// runs in ascending register order; each send is appended after its source
// and each wait inserted directly before its sink, so at a shared anchor
// sends read in ascending and waits in descending register order.
inline SyncProgram insert_sync(const LoopNest& loop,
                               const std::vector<Dependence>& deps) {
  for (const auto& d : deps) {
    if (d.distance < 1)
      throw std::invalid_argument(
          "cannot synchronize " + d.source + " -> " + d.sink + " on " +
          d.array + ": distance " + std::to_string(d.distance) +
          " is not loop-carried");
    if (loop.position_of(d.source) < 0 || loop.position_of(d.sink) < 0)
      throw std::invalid_argument("dependence endpoint not in loop body");
  }

  SyncProgram sp;
  sp.loop = loop;
  sp.loop.syncs.clear();
  sp.deps = assign_registers(loop, deps);

  std::vector<std::vector<SyncInstr>> before(loop.statements.size());
  std::vector<std::vector<SyncInstr>> after(loop.statements.size());
  for (std::size_t r = 0; r < sp.deps.size(); ++r) {
    const Dependence& d = sp.deps[r];
    int reg = static_cast<int>(r);
    after[loop.position_of(d.source)].push_back(
        SyncInstr{SyncOp::Send, reg, 0, d.array, d.source, AnchorPos::After});
    auto& waits = before[loop.position_of(d.sink)];
    waits.insert(waits.begin(), SyncInstr{SyncOp::Wait, reg, d.distance,
                                          d.array, d.sink, AnchorPos::Before});
  }
  for (std::size_t s = 0; s < loop.statements.size(); ++s) {
    for (const auto& w : before[s]) sp.loop.syncs.push_back(w);
    for (const auto& snd : after[s]) sp.loop.syncs.push_back(snd);
  }
  return sp;
}

// Wraps a loop for simulation without any synchronization.
inline SyncProgram no_sync(const LoopNest& loop) {
  SyncProgram sp;
  sp.loop = loop;
  sp.loop.syncs.clear();
  return sp;
}

// Reconstructs a SyncProgram from a loop whose sync instructions were parsed
// from source text (register assignments already fixed by the text).
inline SyncProgram from_annotated(const LoopNest& loop) {
  SyncProgram sp;
  sp.loop = loop;
  return sp;
}

}  // namespace parasync
