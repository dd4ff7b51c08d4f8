#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "parasync/json_io.hpp"
#include "parasync/parser.hpp"
#include "parasync/printer.hpp"

// Pipeline driver: parse -> analyze -> transform -> sync -> simulate, each
// stage dumping its artifacts into --out. Exit codes are part of the
// contract:
//   0  success
//   1  parse / input-shape error
//   2  I/O error
//   3  sync requested but the loop carries no cross-iteration dependence
//   4  simulation mismatch or deadlock

namespace {

namespace fs = std::filesystem;
using namespace parasync;

constexpr int kExitParse = 1;
constexpr int kExitIo = 2;
constexpr int kExitNoDeps = 3;
constexpr int kExitSimFail = 4;

struct Options {
  std::string input;
  std::string out = ".";
  std::int64_t n = 16;
  bool locality = false;
  bool optimize = false;
  std::string method = "isd";
  std::vector<int> threads = {2, 3, 4};
  int seeds = 100;
  std::string dist = "block";
  std::string policy = "random";
  bool trace = false;
  std::uint64_t seed_base = 0;
  std::set<std::string> emit = {"json", "dot", "loop"};
};

std::uint64_t env_seed() {
  const char* s = std::getenv("PARASYNC_SEED");
  if (!s) return 0;
  return std::strtoull(s, nullptr, 10);
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool write_file(const Options& opt, const std::string& name,
                const std::string& text) {
  std::error_code ec;
  fs::create_directories(opt.out, ec);
  const fs::path path = fs::path(opt.out) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path.string() << "\n";
    return false;
  }
  out << text;
  std::cout << "wrote " << path.string() << "\n";
  return true;
}

bool want(const Options& opt, const std::string& kind) {
  return opt.emit.count(kind) > 0;
}

int load_program(const Options& opt, Program& out) {
  auto text = read_file(opt.input);
  if (!text) {
    std::cerr << "error: cannot read " << opt.input << "\n";
    return kExitIo;
  }
  try {
    out = parse(*text);
  } catch (const ParseError& e) {
    std::cerr << opt.input << ":" << e.what() << "\n";
    return kExitParse;
  }
  return 0;
}

int require_single_loop(const Program& p, const char* cmd) {
  if (p.loops.size() != 1) {
    std::cerr << "error: " << cmd << " expects exactly one loop, got "
              << p.loops.size() << "\n";
    return kExitParse;
  }
  return 0;
}

Dist parse_dist(const std::string& s) {
  return s == "cyclic" ? Dist::Cyclic : Dist::Block;
}

Policy parse_policy(const std::string& s) {
  if (s == "sequential") return Policy::Sequential;
  if (s == "adversarial") return Policy::Adversarial;
  return Policy::Random;
}

int cmd_analyze(const Options& opt) {
  Program p;
  if (int rc = load_program(opt, p)) return rc;

  std::vector<DepGraph> graphs;
  for (const auto& loop : p.loops) graphs.push_back(analyze(loop));

  if (want(opt, "json")) {
    nlohmann::json j;
    if (graphs.size() == 1)
      j = graphs.front();
    else
      j = graphs;
    if (!write_file(opt, "depgraph.json", dumps(j))) return kExitIo;
  }
  if (want(opt, "dot")) {
    for (std::size_t k = 0; k < graphs.size(); ++k) {
      const std::string name =
          graphs.size() == 1 ? "depgraph.dot"
                             : "depgraph." + std::to_string(k) + ".dot";
      if (!write_file(opt, name, to_dot(graphs[k]))) return kExitIo;
    }
  }
  if (want(opt, "loop")) {
    if (!write_file(opt, "canonical.loop", print(p))) return kExitIo;
  }
  for (std::size_t k = 0; k < graphs.size(); ++k)
    std::cout << "loop " << k << ": " << graphs[k].edges.size()
              << " dependence(s)\n";
  return 0;
}

int cmd_transform(const Options& opt) {
  Program p;
  if (int rc = load_program(opt, p)) return rc;
  if (int rc = require_single_loop(p, "transform")) return rc;

  const LoopNest& loop = p.loops.front();
  DepGraph g = analyze(loop);
  SccPartition part = scc(g);
  FissionPlan plan = opt.locality ? group_for_locality(loop, g, part)
                                  : plan_from_components(g, part);
  Program fissioned = fission(p, plan);

  if (want(opt, "json")) {
    if (!write_file(opt, "scc.json", dumps(nlohmann::json(part))))
      return kExitIo;
    if (!write_file(opt, "plan.json", dumps(nlohmann::json(plan))))
      return kExitIo;
  }
  if (want(opt, "loop")) {
    if (!write_file(opt, "transformed.loop", print(fissioned))) return kExitIo;
  }

  for (std::size_t c = 0; c < part.components.size(); ++c) {
    if (!part.is_cyclic[c]) continue;
    std::cout << "cyclic component {";
    for (std::size_t k = 0; k < part.components[c].size(); ++k)
      std::cout << (k ? "," : "") << part.components[c][k];
    std::cout << "} stays sequential; consider the sync command\n";
  }
  return 0;
}

int cmd_sync(const Options& opt) {
  Program p;
  if (int rc = load_program(opt, p)) return rc;
  if (int rc = require_single_loop(p, "sync")) return rc;

  LoopNest loop = p.loops.front();
  loop.syncs.clear();
  DepGraph g = analyze(loop);
  std::vector<Dependence> carried = carried_edges(g);
  if (carried.empty()) {
    std::cerr << "error: no loop-carried dependence; nothing to synchronize\n";
    return kExitNoDeps;
  }

  std::vector<Dependence> to_sync = carried;
  std::optional<ElimResult> isd_result, pattern_result;
  if (opt.optimize) {
    if (opt.method == "isd" || opt.method == "both")
      isd_result = eliminate_by_reduction(loop, carried);
    if (opt.method == "pattern" || opt.method == "both")
      pattern_result = eliminate_by_pattern(loop, carried);
    // With both methods requested, keep every dependence either one retains.
    if (opt.method == "both") {
      to_sync.clear();
      for (const auto& d : carried) {
        bool elim_isd = std::find(isd_result->eliminated.begin(),
                                  isd_result->eliminated.end(),
                                  d) != isd_result->eliminated.end();
        bool elim_pat = std::find(pattern_result->eliminated.begin(),
                                  pattern_result->eliminated.end(),
                                  d) != pattern_result->eliminated.end();
        if (!(elim_isd && elim_pat)) to_sync.push_back(d);
      }
    } else if (isd_result) {
      to_sync = isd_result->retained;
    } else {
      to_sync = pattern_result->retained;
    }
  }

  SyncProgram sp = insert_sync(loop, to_sync);

  if (want(opt, "json")) {
    if (!write_file(opt, "syncprogram.json", dumps(nlohmann::json(sp))))
      return kExitIo;
    if (opt.optimize) {
      nlohmann::json elim;
      if (opt.method == "both") {
        elim = {{"isd", *isd_result},
                {"pattern", *pattern_result},
                {"agreement",
                 isd_result->eliminated == pattern_result->eliminated}};
      } else if (isd_result) {
        elim = *isd_result;
      } else {
        elim = *pattern_result;
      }
      if (!write_file(opt, "elim.json", dumps(elim))) return kExitIo;
    }
  }
  if (want(opt, "loop")) {
    if (!write_file(opt, "synchronized.loop", print(sp.loop))) return kExitIo;
  }
  if (want(opt, "dot")) {
    std::vector<std::int64_t> distances;
    for (const auto& d : carried) distances.push_back(d.distance);
    Isd isd = build_isd(loop, carried, window_size(distances));
    const ElimResult* highlight = nullptr;
    if (isd_result)
      highlight = &*isd_result;
    else if (pattern_result)
      highlight = &*pattern_result;
    if (!write_file(opt, "isd.dot", to_dot_isd(isd, highlight)))
      return kExitIo;
  }

  std::cout << "synchronized " << to_sync.size() << " of " << carried.size()
            << " loop-carried dependence(s)\n";
  return 0;
}

int cmd_simulate(const Options& opt) {
  Program p;
  if (int rc = load_program(opt, p)) return rc;
  if (opt.n < 1) {
    std::cerr << "error: simulation needs --n >= 1\n";
    return kExitParse;
  }

  SweepConfig cfg;
  cfg.threads = opt.threads;
  cfg.seeds = opt.seeds;
  cfg.seed_base = opt.seed_base;
  cfg.dist = parse_dist(opt.dist);
  cfg.policy = parse_policy(opt.policy);

  SweepReport rep = sweep(p, opt.n, cfg);

  if (want(opt, "json")) {
    if (!write_file(opt, "sim.json", dumps(nlohmann::json(rep))))
      return kExitIo;
  }
  if (opt.trace) {
    Schedule sched{cfg.threads.front(), cfg.dist, cfg.seed_base, cfg.policy};
    SimReport one = run_parallel(p, opt.n, sched, true);
    std::string text;
    for (const auto& line : one.trace) text += line + "\n";
    if (!write_file(opt, "trace.txt", text)) return kExitIo;
  }

  std::cout << rep.passed << "/" << rep.total << " runs matched the "
            << "sequential oracle";
  if (rep.deadlocks > 0) std::cout << ", " << rep.deadlocks << " deadlocked";
  std::cout << "\n";
  if (!rep.all_passed()) {
    if (rep.first_failure)
      std::cout << "first failure: threads=" << rep.first_failure->threads
                << " seed=" << rep.first_failure->seed << "\n";
    return kExitSimFail;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mini auto-parallelizing loop compiler"};
  app.require_subcommand(1);

  Options opt;
  opt.seed_base = env_seed();

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--input", opt.input, "input .loop file")->required();
    cmd->add_option("--out", opt.out, "output directory for artifacts");
    cmd->add_option("--n", opt.n, "value bound to the symbolic limit n");
    cmd->add_option("--emit", opt.emit,
                    "artifact kinds to write (json,dot,loop)")
        ->delimiter(',');
  };

  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "dependence graph of each loop");
  add_common(analyze_cmd);

  CLI::App* transform_cmd = app.add_subcommand(
      "transform", "reorder, group, and fission one loop for parallelism");
  add_common(transform_cmd);
  transform_cmd->add_flag("--locality", opt.locality,
                          "merge independent statements reading common data");

  CLI::App* sync_cmd = app.add_subcommand(
      "sync", "insert send/wait pairs for loop-carried dependences");
  add_common(sync_cmd);
  sync_cmd->add_flag("--optimize", opt.optimize,
                     "drop synchronization that is already implied");
  sync_cmd->add_option("--method", opt.method, "elimination method")
      ->check(CLI::IsMember({"isd", "pattern", "both"}));

  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "run on virtual threads and compare with sequential");
  add_common(simulate_cmd);
  simulate_cmd->add_option("--threads", opt.threads, "thread counts to try")
      ->delimiter(',');
  simulate_cmd->add_option("--seeds", opt.seeds, "seeds per thread count");
  simulate_cmd->add_option("--seed", opt.seed_base,
                           "seed base (default: PARASYNC_SEED or 0)");
  simulate_cmd->add_option("--dist", opt.dist, "iteration distribution")
      ->check(CLI::IsMember({"block", "cyclic"}));
  simulate_cmd->add_option("--policy", opt.policy, "scheduling policy")
      ->check(CLI::IsMember({"random", "sequential", "adversarial"}));
  simulate_cmd->add_flag("--trace", opt.trace,
                         "also write a step trace of one run");

  CLI11_PARSE(app, argc, argv);

  if (analyze_cmd->parsed()) return cmd_analyze(opt);
  if (transform_cmd->parsed()) return cmd_transform(opt);
  if (sync_cmd->parsed()) return cmd_sync(opt);
  return cmd_simulate(opt);
}
