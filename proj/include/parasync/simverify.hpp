#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "parasync/ast.hpp"
#include "parasync/syncgen.hpp"

// Execution and verification. A program runs two ways: sequentially (the
// correctness reference) and on a simulated shared-memory machine with
// virtual threads, per-dependence synchronization registers, and a seeded
// scheduler that interleaves at statement granularity. The parallel run is
// compared against the sequential one cell by cell, and every read is
// checked against the writer instance the sequential execution would have
// observed, so a mismatch always comes with a concrete stale-read witness.

namespace parasync {

// ----- memory ---------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Never-written cells read a fixed pseudo-random value derived from the
// array name and index, so uninitialized data is deterministic and two runs
// agree without any explicit initialization pass.
inline std::uint64_t default_value(std::string_view array, std::int64_t index) {
  return splitmix64(fnv1a64(array) ^
                    splitmix64(static_cast<std::uint64_t>(index)));
}

struct Memory {
  std::map<std::string, std::map<std::int64_t, std::uint64_t>> arrays;

  std::uint64_t load(const std::string& array, std::int64_t index) const {
    auto a = arrays.find(array);
    if (a != arrays.end()) {
      auto c = a->second.find(index);
      if (c != a->second.end()) return c->second;
    }
    return default_value(array, index);
  }

  void store(const std::string& array, std::int64_t index, std::uint64_t v) {
    arrays[array][index] = v;
  }

  friend bool operator==(const Memory&, const Memory&) = default;
};

// ----- instrumented execution ------------------------------------------------

// Which statement instance wrote a cell; "initial" marks the default value.
struct WriteTag {
  std::string stmt = "initial";
  std::int64_t iter = 0;

  friend bool operator==(const WriteTag&, const WriteTag&) = default;
};

namespace detail {

struct Cell {
  std::uint64_t value = 0;
  WriteTag tag;
};

struct TaggedMemory {
  std::map<std::string, std::map<std::int64_t, Cell>> arrays;

  Cell load(const std::string& array, std::int64_t index) const {
    auto a = arrays.find(array);
    if (a != arrays.end()) {
      auto c = a->second.find(index);
      if (c != a->second.end()) return c->second;
    }
    return Cell{default_value(array, index), WriteTag{}};
  }

  void store(const std::string& array, std::int64_t index, Cell c) {
    arrays[array][index] = c;
  }

  Memory values() const {
    Memory m;
    for (const auto& [name, cells] : arrays)
      for (const auto& [idx, cell] : cells) m.arrays[name][idx] = cell.value;
    return m;
  }
};

// Evaluates rhs with 64-bit wraparound arithmetic; the observer sees every
// array read in left-to-right order.
template <typename Observer>
std::uint64_t eval(const ExprPtr& e, const TaggedMemory& mem, std::int64_t i,
                   Observer&& observe) {
  switch (e->kind) {
    case Expr::Kind::Lit:
      return static_cast<std::uint64_t>(e->lit);
    case Expr::Kind::Ref: {
      Cell c = mem.load(e->ref.array, i + e->ref.offset);
      observe(e->ref.array, i + e->ref.offset, c);
      return c.value;
    }
    case Expr::Kind::Bin: {
      std::uint64_t l = eval(e->lhs, mem, i, observe);
      std::uint64_t r = eval(e->rhs, mem, i, observe);
      switch (e->op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
      }
      throw std::logic_error("unknown operator");
    }
  }
  throw std::logic_error("unknown expression kind");
}

inline std::int64_t upper_of(const LoopNest& loop) {
  if (loop.upper.symbolic)
    throw std::invalid_argument("loop bound n is unbound; supply a value");
  return loop.upper.value;
}

}  // namespace detail

// What the sequential execution observed: final memory with writer tags and,
// for every read slot of every statement instance, the writer instance the
// read saw. Slots number a statement's reads left to right.
struct SeqReference {
  using ReadKey = std::tuple<int, int, std::int64_t, int>;  // loop, stmt, iter, slot

  detail::TaggedMemory memory;
  std::map<ReadKey, WriteTag> reads;

  Memory values() const { return memory.values(); }
};

inline SeqReference run_reference(const Program& p, std::int64_t n) {
  Program bound = bind_upper(p, n);
  SeqReference ref;
  for (std::size_t li = 0; li < bound.loops.size(); ++li) {
    const LoopNest& loop = bound.loops[li];
    const std::int64_t hi = detail::upper_of(loop);
    for (std::int64_t i = loop.lower; i < hi; ++i) {
      for (std::size_t si = 0; si < loop.statements.size(); ++si) {
        const Statement& st = loop.statements[si];
        int slot = 0;
        std::uint64_t v = detail::eval(
            st.rhs, ref.memory, i,
            [&](const std::string&, std::int64_t, const detail::Cell& c) {
              ref.reads[{static_cast<int>(li), static_cast<int>(si), i,
                         slot++}] = c.tag;
            });
        ref.memory.store(st.lhs.array, i + st.lhs.offset,
                         detail::Cell{v, WriteTag{st.label, i}});
      }
    }
  }
  return ref;
}

// Sequential semantics: loops in order, iterations ascending, statements in
// body order. Sync instructions are ignored (they are no-ops in a single
// thread).
inline Memory run_sequential(const Program& p, std::int64_t n) {
  return run_reference(p, n).values();
}

// ----- schedules ------------------------------------------------------------

enum class Dist { Block, Cyclic };
enum class Policy { Random, Sequential, Adversarial };

struct Schedule {
  int threads = 2;
  Dist dist = Dist::Block;
  std::uint64_t seed = 0;
  Policy policy = Policy::Random;
};

inline const char* dist_name(Dist d) {
  return d == Dist::Block ? "block" : "cyclic";
}

inline const char* policy_name(Policy p) {
  switch (p) {
    case Policy::Random: return "random";
    case Policy::Sequential: return "sequential";
    case Policy::Adversarial: return "adversarial";
  }
  return "?";
}

// ----- reports --------------------------------------------------------------

// One read (or the final state of one cell, reader "final") whose writer
// differs from what sequential execution guarantees.
struct Violation {
  std::string reader_stmt;     // statement label, or "final"
  std::int64_t reader_iter = 0;  // meaningless for "final"
  std::string array;
  std::int64_t index = 0;
  WriteTag expected;
  WriteTag observed;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct SimReport {
  Memory final_memory;
  bool matched_oracle = false;
  bool deadlocked = false;
  std::vector<int> blocked_threads;
  std::vector<Violation> violations;
  std::uint64_t steps = 0;
  std::vector<std::string> trace;
};

// ----- the parallel machine --------------------------------------------------

namespace detail {

struct Item {
  enum class Kind { Stmt, Sync } kind = Kind::Stmt;
  int stmt = -1;        // statement position for Kind::Stmt
  SyncInstr sync;       // for Kind::Sync
};

// The loop body flattened to scheduler granularity: waits anchored before a
// statement, the statement, sends anchored after it.
inline std::vector<Item> body_items(const LoopNest& loop) {
  std::vector<Item> items;
  for (std::size_t s = 0; s < loop.statements.size(); ++s) {
    for (const auto& sy : loop.syncs)
      if (sy.anchor_label == loop.statements[s].label &&
          sy.anchor_pos == AnchorPos::Before)
        items.push_back({Item::Kind::Sync, -1, sy});
    items.push_back({Item::Kind::Stmt, static_cast<int>(s), {}});
    for (const auto& sy : loop.syncs)
      if (sy.anchor_label == loop.statements[s].label &&
          sy.anchor_pos == AnchorPos::After)
        items.push_back({Item::Kind::Sync, -1, sy});
  }
  return items;
}

inline std::vector<std::vector<std::int64_t>> assign_iterations(
    std::int64_t lower, std::int64_t upper, int threads, Dist dist) {
  std::vector<std::vector<std::int64_t>> owned(threads);
  const std::int64_t total = upper > lower ? upper - lower : 0;
  if (dist == Dist::Block) {
    const std::int64_t chunk = (total + threads - 1) / threads;
    for (std::int64_t j = 0; j < total; ++j)
      owned[static_cast<int>(chunk == 0 ? 0 : j / chunk)].push_back(lower + j);
  } else {
    for (std::int64_t j = 0; j < total; ++j)
      owned[static_cast<int>(j % threads)].push_back(lower + j);
  }
  return owned;
}

}  // namespace detail

// Runs the program on virtual threads. Iterations of each loop are
// distributed across threads; each thread executes its iterations in
// ascending order and, within an iteration, the flattened body items in
// order. At every step the scheduler picks one runnable thread:
//   Random       uniformly seeded choice;
//   Sequential   the thread whose next item comes first in sequential order
//                (reproduces the sequential execution exactly);
//   Adversarial  prefers the thread at the highest iteration for a seeded
//                prefix of steps, starving producers, then goes random.
// wait(r, v) blocks until v has been sent on register r; arguments below the
// loop's lower bound pass immediately (those iterations never existed, so
// there is nothing to wait for). Loops of a multi-loop program run one after
// another with a barrier in between and fresh registers. Memory writes are
// visible as soon as the writing statement executes.
inline SimReport run_parallel(const Program& p, std::int64_t n,
                              const Schedule& sched,
                              bool record_trace = false) {
  if (sched.threads < 1) throw std::invalid_argument("need >= 1 thread");
  Program bound = bind_upper(p, n);
  SeqReference ref = run_reference(bound, n);

  SimReport report;
  detail::TaggedMemory mem;
  std::mt19937_64 rng(sched.seed);

  for (std::size_t li = 0; li < bound.loops.size() && !report.deadlocked;
       ++li) {
    const LoopNest& loop = bound.loops[li];
    const std::int64_t hi = detail::upper_of(loop);
    const auto items = detail::body_items(loop);
    const auto owned =
        detail::assign_iterations(loop.lower, hi, sched.threads, sched.dist);

    int max_reg = -1;
    for (const auto& sy : loop.syncs) max_reg = std::max(max_reg, sy.reg);
    std::vector<std::set<std::int64_t>> sent(max_reg + 1);

    struct Thread {
      std::size_t iter_idx = 0;  // into owned list
      std::size_t item_idx = 0;  // into items
    };
    std::vector<Thread> threads(sched.threads);

    auto done = [&](int t) {
      return threads[t].iter_idx >= owned[t].size();
    };
    auto current_iter = [&](int t) { return owned[t][threads[t].iter_idx]; };
    auto wait_ok = [&](const SyncInstr& sy, std::int64_t i) {
      const std::int64_t v = i - sy.offset;
      if (v < loop.lower) return true;
      return sy.reg <= max_reg && sent[sy.reg].count(v) > 0;
    };
    auto runnable = [&](int t) {
      if (done(t)) return false;
      const auto& item = items[threads[t].item_idx];
      if (item.kind == detail::Item::Kind::Sync &&
          item.sync.op == SyncOp::Wait)
        return wait_ok(item.sync, current_iter(t));
      return true;
    };

    std::uint64_t total_items = 0;
    for (const auto& o : owned) total_items += o.size() * items.size();
    std::uint64_t adversarial_prefix = 0;
    if (sched.policy == Policy::Adversarial && total_items > 0)
      adversarial_prefix =
          total_items / 2 + rng() % (2 * total_items - total_items / 2 + 1);

    std::uint64_t loop_steps = 0;
    while (true) {
      std::vector<int> ready;
      bool all_done = true;
      for (int t = 0; t < sched.threads; ++t) {
        if (!done(t)) all_done = false;
        if (runnable(t)) ready.push_back(t);
      }
      if (all_done) break;
      if (ready.empty()) {
        report.deadlocked = true;
        for (int t = 0; t < sched.threads; ++t)
          if (!done(t)) report.blocked_threads.push_back(t);
        break;
      }

      int pick = ready.front();
      switch (sched.policy) {
        case Policy::Random:
          pick = ready[rng() % ready.size()];
          break;
        case Policy::Sequential: {
          auto key = [&](int t) {
            return std::make_pair(current_iter(t), threads[t].item_idx);
          };
          for (int t : ready)
            if (key(t) < key(pick)) pick = t;
          break;
        }
        case Policy::Adversarial: {
          if (loop_steps < adversarial_prefix) {
            for (int t : ready)
              if (current_iter(t) > current_iter(pick)) pick = t;
          } else {
            pick = ready[rng() % ready.size()];
          }
          break;
        }
      }

      Thread& th = threads[pick];
      const std::int64_t i = current_iter(pick);
      const auto& item = items[th.item_idx];
      if (item.kind == detail::Item::Kind::Stmt) {
        const Statement& st = loop.statements[item.stmt];
        int slot = 0;
        std::uint64_t v = detail::eval(
            st.rhs, mem, i,
            [&](const std::string& arr, std::int64_t idx,
                const detail::Cell& c) {
              auto it = ref.reads.find({static_cast<int>(li), item.stmt, i,
                                        slot++});
              if (it != ref.reads.end() && !(it->second == c.tag))
                report.violations.push_back(Violation{
                    st.label, i, arr, idx, it->second, c.tag});
            });
        mem.store(st.lhs.array, i + st.lhs.offset,
                  detail::Cell{v, WriteTag{st.label, i}});
        if (record_trace)
          report.trace.push_back(
              "t" + std::to_string(pick) + " i=" + std::to_string(i) + " " +
              st.label + ": " + st.lhs.array + "[" +
              std::to_string(i + st.lhs.offset) + "] = " + std::to_string(v));
      } else {
        const SyncInstr& sy = item.sync;
        if (sy.op == SyncOp::Send && sy.reg <= max_reg)
          sent[sy.reg].insert(i - sy.offset);
        if (record_trace)
          report.trace.push_back(
              "t" + std::to_string(pick) + " i=" + std::to_string(i) + " " +
              std::string(sy.op == SyncOp::Send ? "send(" : "wait(") +
              std::to_string(sy.reg) + ", " + std::to_string(i - sy.offset) +
              ", " + sy.var + ")");
      }

      ++loop_steps;
      ++report.steps;
      ++th.item_idx;
      if (th.item_idx == items.size()) {
        th.item_idx = 0;
        ++th.iter_idx;
      }
    }
  }

  // Final-state provenance: a cell whose last writer differs from the
  // sequential last writer is a violation even if earlier reads looked fine.
  if (!report.deadlocked) {
    for (const auto& [name, cells] : ref.memory.arrays)
      for (const auto& [idx, cell] : cells) {
        const detail::Cell got = mem.load(name, idx);
        if (!(got.tag == cell.tag))
          report.violations.push_back(
              Violation{"final", 0, name, idx, cell.tag, got.tag});
      }
  }

  report.final_memory = mem.values();
  report.matched_oracle = !report.deadlocked &&
                          report.violations.empty() &&
                          report.final_memory == ref.values();
  return report;
}

inline SimReport run_parallel(const SyncProgram& sp, std::int64_t n,
                              const Schedule& sched,
                              bool record_trace = false) {
  Program p;
  p.loops.push_back(sp.loop);
  return run_parallel(p, n, sched, record_trace);
}

// ----- sweeps ---------------------------------------------------------------

struct SweepConfig {
  std::vector<int> threads = {2, 3, 4};
  int seeds = 100;
  std::uint64_t seed_base = 0;
  Dist dist = Dist::Block;
  Policy policy = Policy::Random;
};

struct SweepFailure {
  int threads = 0;
  std::uint64_t seed = 0;
  SimReport report;
};

struct SweepReport {
  int total = 0;
  int passed = 0;
  int failed = 0;
  int deadlocks = 0;
  std::optional<SweepFailure> first_failure;

  bool all_passed() const { return failed == 0 && deadlocks == 0; }
};

// Cross product of thread counts and seeds, run in a fixed order so the
// aggregate is reproducible.
inline SweepReport sweep(const Program& p, std::int64_t n,
                         const SweepConfig& cfg) {
  SweepReport agg;
  for (int t : cfg.threads) {
    for (int k = 0; k < cfg.seeds; ++k) {
      Schedule sched{t, cfg.dist, cfg.seed_base + static_cast<std::uint64_t>(k),
                     cfg.policy};
      SimReport r = run_parallel(p, n, sched);
      ++agg.total;
      if (r.deadlocked) ++agg.deadlocks;
      if (r.matched_oracle) {
        ++agg.passed;
      } else {
        ++agg.failed;
        if (!agg.first_failure)
          agg.first_failure = SweepFailure{t, sched.seed, std::move(r)};
      }
    }
  }
  return agg;
}

inline SweepReport sweep(const SyncProgram& sp, std::int64_t n,
                         const SweepConfig& cfg) {
  Program p;
  p.loops.push_back(sp.loop);
  return sweep(p, n, cfg);
}

}  // namespace parasync
