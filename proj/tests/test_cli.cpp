#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = BERKNASH_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("bn_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string report_value(const fs::path& report, const std::string& key) {
  std::ifstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
  }
  return "";
}

// drop the provenance header (it embeds the output path from argv)
std::string body(const fs::path& p) {
  const std::string s = slurp(p);
  const auto nl = s.find('\n');
  return nl == std::string::npos ? s : s.substr(nl + 1);
}

}  // namespace

TEST_CASE("unknown subcommand and missing model exit 1") {
  CHECK(run("frobnicate") != 0);
  const auto d = fresh_dir("missing");
  CHECK(run("solve --model /nonexistent/m.txt --out " + d.string()) == 1);
  CHECK(run("solve --out " + d.string()) == 1);  // no problem given
}

TEST_CASE("small solve writes the artifact set and exits 0") {
  const auto d = fresh_dir("solve");
  const int rc = run("solve --example ar1 --states 101 --thetas 5,3 --radius 8 --restarts 0 --out " +
                     d.string());
  CHECK(rc == 0);
  CHECK(fs::exists(d / "report.txt"));
  CHECK(fs::exists(d / "m.csv"));
  CHECK(fs::exists(d / "nu.csv"));
  CHECK(fs::exists(d / "kl.csv"));
  CHECK(report_value(d / "report.txt", "converged") == "true");
  // artifacts carry the provenance header
  const std::string all = slurp(d / "m.csv");
  const std::string head = all.substr(0, all.find('\n'));
  CHECK(head.find("# berknash") == 0);
  CHECK(head.find("argv:") != std::string::npos);
  CHECK(head.find("seed:") != std::string::npos);
}

TEST_CASE("verify accepts the solve output") {
  const auto d = fresh_dir("verify");
  REQUIRE(run("solve --example ar1 --states 101 --thetas 5,3 --radius 8 --restarts 0 --out " +
              d.string()) == 0);
  const int rc = run("verify --example ar1 --states 101 --thetas 5,3 --radius 8 --m " +
                     (d / "m.csv").string() + " --nu " + (d / "nu.csv").string() + " --out " +
                     d.string());
  CHECK(rc == 0);
}

TEST_CASE("identical argv and seed give byte-identical artifacts") {
  const auto d1 = fresh_dir("det1");
  const auto d2 = fresh_dir("det2");
  const std::string args = "solve --example ar1 --states 101 --thetas 5,3 --radius 8 --seed 42 "
                           "--restarts 1 --out ";
  REQUIRE(run(args + d1.string()) == 0);
  REQUIRE(run(args + d2.string()) == 0);
  for (const char* f : {"m.csv", "nu.csv", "kl.csv"})
    CHECK(body(d1 / f) == body(d2 / f));
  // report differs only in the out path inside argv; compare value lines
  CHECK(report_value(d1 / "report.txt", "state_variance") ==
        report_value(d2 / "report.txt", "state_variance"));
}

TEST_CASE("ladder on the unit root exits 2 with the mass-escape verdict") {
  const auto d = fresh_dir("ladder");
  const int rc = run("ladder --example ar1 --param a0=1.0 --states 40 --thetas 5,2 --radius 4 "
                     "--levels 3 --restarts 0 --out " + d.string());
  CHECK(rc == 2);
  CHECK(report_value(d / "report.txt", "verdict") == "mass-escape");
}

TEST_CASE("learn writes the three trace artifacts") {
  const auto d = fresh_dir("learn");
  const int rc = run("learn --example ar1 --states 51 --thetas 3,2 --radius 6 --horizon 2000 "
                     "--seed 5 --out " + d.string());
  CHECK(rc == 0);
  CHECK(fs::exists(d / "trace_history.csv"));
  CHECK(fs::exists(d / "trace_beliefs.csv"));
  CHECK(fs::exists(d / "trace_freq.csv"));
  // determinism of the trace
  const auto d2 = fresh_dir("learn2");
  REQUIRE(run("learn --example ar1 --states 51 --thetas 3,2 --radius 6 --horizon 2000 --seed 5 "
              "--out " + d2.string()) == 0);
  CHECK(body(d / "trace_history.csv") == body(d2 / "trace_history.csv"));
}

TEST_CASE("example emits a parseable document and oracle values") {
  const auto d = fresh_dir("example");
  REQUIRE(run("example --example revenue --out " + d.string()) == 0);
  CHECK(fs::exists(d / "model.txt"));
  const std::string orc = slurp(d / "oracle.csv");
  CHECK(orc.find("theta_star") != std::string::npos);
  // the emitted document is loadable by solve
  const auto d2 = fresh_dir("example_solve");
  const int rc = run("discretize --model " + (d / "model.txt").string() + " --states 8,16 " +
                     "--actions 5 --thetas 4 --out " + d2.string());
  CHECK(rc == 0);
}

TEST_CASE("lyapunov subcommand distinguishes stable from explosive drift") {
  const auto d = fresh_dir("lyap");
  CHECK(run("lyapunov --example ar1 --param a0=0.5 --smax 20 --out " + d.string()) == 0);
  CHECK(report_value(d / "report.txt", "pass") == "true");
  const auto d2 = fresh_dir("lyap2");
  CHECK(run("lyapunov --example ar1 --param a0=1.2 --smax 20 --out " + d2.string()) == 2);
  CHECK(report_value(d2 / "report.txt", "pass") == "false");
}
