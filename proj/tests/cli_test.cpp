#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

int decode_status(int raw) {
#ifdef _WIN32
  return raw;
#else
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
#endif
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path log = fs::temp_directory_path() /
                 ("parasync_cli_" + std::to_string(counter++) + ".log");
  std::string cmd = std::string(PARASYNC_BIN) + " " + args + " > " +
                    log.string() + " 2>&1";
  RunResult r;
  r.exit_code = decode_status(std::system(cmd.c_str()));
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  fs::remove(log);
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("parasync_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_input(const fs::path& dir, const std::string& name,
                     const std::string& text) {
  fs::path file = dir / name;
  std::ofstream(file) << text;
  return file;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json slurp_json(const fs::path& file) {
  return nlohmann::json::parse(slurp(file));
}

}  // namespace

TEST_CASE("analyze writes the graph, the dot rendering, and canonical text") {
  fs::path dir = fresh_dir("analyze");
  fs::path input = write_input(dir, "in.loop", testsupport::dag4_src());
  RunResult r = run_cli("analyze --input " + input.string() + " --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("5 dependence(s)") != std::string::npos);
  nlohmann::json g = slurp_json(dir / "out" / "depgraph.json");
  CHECK(g["edges"].size() == 5);
  CHECK(fs::exists(dir / "out" / "depgraph.dot"));
  CHECK(slurp(dir / "out" / "canonical.loop") == testsupport::dag4_src());
}

TEST_CASE("analyze of a multi-loop file writes one dot file per loop") {
  fs::path dir = fresh_dir("analyze_multi");
  fs::path input = write_input(
      dir, "in.loop",
      "for (i=1; i<n; i++) { S1: a[i] = a[i-1]; }\n"
      "for (i=1; i<n; i++) { S2: b[i] = b[i-2]; }\n");
  RunResult r = run_cli("analyze --input " + input.string() + " --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 0);
  nlohmann::json g = slurp_json(dir / "out" / "depgraph.json");
  REQUIRE(g.is_array());
  CHECK(g.size() == 2);
  CHECK(fs::exists(dir / "out" / "depgraph.0.dot"));
  CHECK(fs::exists(dir / "out" / "depgraph.1.dot"));
}

TEST_CASE("parse failures exit with the parse code and a location") {
  fs::path dir = fresh_dir("parse_fail");
  fs::path input = write_input(dir, "bad.loop", "for (i=1; i<n; i++) { }\n");
  RunResult r = run_cli("analyze --input " + input.string() + " --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("bad.loop:") != std::string::npos);
}

TEST_CASE("unreadable input exits with the io code") {
  RunResult r = run_cli("analyze --input /nonexistent/x.loop --out /tmp");
  CHECK(r.exit_code == 2);
}

TEST_CASE("transform splits the chain and reports component order") {
  fs::path dir = fresh_dir("transform");
  fs::path input = write_input(dir, "in.loop", testsupport::dag4_src());
  RunResult r = run_cli("transform --input " + input.string() + " --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 0);
  nlohmann::json scc = slurp_json(dir / "out" / "scc.json");
  REQUIRE(scc["components"].size() == 4);
  CHECK(scc["components"][0][0] == "S2");
  std::string text = slurp(dir / "out" / "transformed.loop");
  CHECK(text.find("S2") < text.find("S1"));
  CHECK(text.find("S4") < text.find("S3"));
  CHECK(text.find("parallel") != std::string::npos);
}

TEST_CASE("transform with locality grouping merges the compatible pair") {
  fs::path dir = fresh_dir("transform_loc");
  fs::path input = write_input(dir, "in.loop", testsupport::dag4_src());
  RunResult r = run_cli("transform --locality --input " + input.string() +
                        " --out " + (dir / "out").string());
  CHECK(r.exit_code == 0);
  nlohmann::json plan = slurp_json(dir / "out" / "plan.json");
  REQUIRE(plan["groups"].size() == 3);
  CHECK(plan["groups"][1]["statements"] ==
        nlohmann::json::array({"S1", "S4"}));
}

TEST_CASE("transform points cyclic programs at the sync command") {
  fs::path dir = fresh_dir("transform_cyc");
  fs::path input = write_input(dir, "in.loop", testsupport::cycle3_src());
  RunResult r = run_cli("transform --input " + input.string() + " --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("cyclic component {S1,S2,S3}") != std::string::npos);
  CHECK(r.out.find("sync") != std::string::npos);
}

TEST_CASE("sync pairs every carried dependence with a send and a wait") {
  fs::path dir = fresh_dir("sync_full");
  fs::path input = write_input(dir, "in.loop", testsupport::cycle3_src());
  RunResult r = run_cli("sync --input " + input.string() + " --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("synchronized 4 of 4") != std::string::npos);
  CHECK(slurp(dir / "out" / "synchronized.loop") ==
        "for (i=1; i<n; i++) {\n"
        "  wait(1, i-1, b);\n"
        "  S1: a[i] = b[i-1] + 1;\n"
        "  send(0, i, a);\n"
        "  wait(3, i-1, c);\n"
        "  S2: b[i] = c[i-1] + 2;\n"
        "  send(1, i, b);\n"
        "  send(2, i, b);\n"
        "  wait(2, i-2, b);\n"
        "  wait(0, i-1, a);\n"
        "  S3: c[i] = b[i-2] + a[i-1];\n"
        "  send(3, i, c);\n"
        "}\n");
  nlohmann::json sp = slurp_json(dir / "out" / "syncprogram.json");
  CHECK(sp["deps"].size() == 4);
  CHECK(fs::exists(dir / "out" / "isd.dot"));
}

TEST_CASE("sync with optimization keeps one pair for the relay chain") {
  fs::path dir = fresh_dir("sync_opt");
  fs::path input = write_input(dir, "in.loop", testsupport::relay3_src());
  RunResult r = run_cli("sync --optimize --method both --input " +
                        input.string() + " --out " + (dir / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("synchronized 1 of 2") != std::string::npos);
  nlohmann::json elim = slurp_json(dir / "out" / "elim.json");
  CHECK(elim["agreement"] == true);
  CHECK(elim["isd"]["eliminated"].size() == 1);
  CHECK(elim["pattern"]["eliminated"].size() == 1);
  CHECK(slurp(dir / "out" / "synchronized.loop") ==
        "for (i=1; i<n; i++) {\n"
        "  S1: a[i] = 1;\n"
        "  wait(0, i-1, c);\n"
        "  S2: b[i] = c[i-1] + 2;\n"
        "  S3: c[i] = a[i-2];\n"
        "  send(0, i, c);\n"
        "}\n");
}

TEST_CASE("sync refuses programs without carried dependences") {
  fs::path dir = fresh_dir("sync_nodeps");
  fs::path input = write_input(dir, "in.loop", testsupport::nodeps_src());
  RunResult r = run_cli("sync --input " + input.string() + " --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("no loop-carried dependence") != std::string::npos);
}

TEST_CASE("simulate passes a properly synchronized program") {
  fs::path dir = fresh_dir("sim_pass");
  fs::path input = write_input(dir, "in.loop", testsupport::relay3_src());
  RunResult synced = run_cli("sync --optimize --input " + input.string() +
                             " --out " + (dir / "out").string());
  REQUIRE(synced.exit_code == 0);
  RunResult r = run_cli("simulate --input " +
                        (dir / "out" / "synchronized.loop").string() +
                        " --out " + (dir / "sim").string() +
                        " --n 16 --threads 2,4 --seeds 50");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("100/100 runs matched") != std::string::npos);
  nlohmann::json rep = slurp_json(dir / "sim" / "sim.json");
  CHECK(rep["total"] == 100);
  CHECK(rep["failed"] == 0);
  CHECK(rep["first_failure"].is_null());
}

TEST_CASE("simulate flags an unsynchronized recurrence under adversarial runs") {
  fs::path dir = fresh_dir("sim_fail");
  fs::path input = write_input(dir, "in.loop", testsupport::cycle3_src());
  RunResult r = run_cli("simulate --policy adversarial --input " +
                        input.string() + " --out " + (dir / "sim").string() +
                        " --n 16 --threads 2 --seeds 20");
  CHECK(r.exit_code == 4);
  CHECK(r.out.find("first failure:") != std::string::npos);
  nlohmann::json rep = slurp_json(dir / "sim" / "sim.json");
  CHECK(rep["failed"].get<int>() > 0);
  CHECK_FALSE(rep["first_failure"].is_null());
}

TEST_CASE("simulate accepts a degenerate one-iteration range") {
  fs::path dir = fresh_dir("sim_tiny");
  fs::path input = write_input(dir, "in.loop", testsupport::cycle3_src());
  RunResult r = run_cli("simulate --input " + input.string() + " --out " +
                        (dir / "sim").string() + " --n 1 --seeds 5");
  CHECK(r.exit_code == 0);
}

TEST_CASE("simulate writes a trace when asked") {
  fs::path dir = fresh_dir("sim_trace");
  fs::path input = write_input(dir, "in.loop", testsupport::relay3_src());
  RunResult r = run_cli("simulate --trace --policy sequential --input " +
                        input.string() + " --out " + (dir / "sim").string() +
                        " --n 6 --threads 2 --seeds 5");
  CHECK(r.exit_code == 0);
  std::string trace = slurp(dir / "sim" / "trace.txt");
  CHECK(trace.find("S1:") != std::string::npos);
  CHECK(trace.find("i=") != std::string::npos);
}

TEST_CASE("emit filter limits which artifacts are written") {
  fs::path dir = fresh_dir("emit");
  fs::path input = write_input(dir, "in.loop", testsupport::dag4_src());
  RunResult r = run_cli("analyze --emit json --input " + input.string() +
                        " --out " + (dir / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "depgraph.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "depgraph.dot"));
  CHECK_FALSE(fs::exists(dir / "out" / "canonical.loop"));
}

TEST_CASE("artifacts are byte-stable across runs") {
  fs::path dir = fresh_dir("stable");
  fs::path input = write_input(dir, "in.loop", testsupport::cycle3_src());
  for (const char* sub : {"a", "b"}) {
    RunResult r1 = run_cli("analyze --input " + input.string() + " --out " +
                           (dir / sub).string());
    REQUIRE(r1.exit_code == 0);
    RunResult r2 = run_cli("simulate --input " + input.string() + " --out " +
                           (dir / sub).string() +
                           " --n 12 --threads 2,3 --seeds 10");
    REQUIRE(r2.exit_code == 4);
  }
  CHECK(slurp(dir / "a" / "depgraph.json") == slurp(dir / "b" / "depgraph.json"));
  CHECK(slurp(dir / "a" / "sim.json") == slurp(dir / "b" / "sim.json"));
}
