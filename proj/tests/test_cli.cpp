#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "evtrace/trace_file.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int exit_code = -1;
  std::string out;
};

Outcome bench(const std::string& args) {
  const std::string command = std::string("\"") + EVTRACE_BENCH_EXE + "\" " + args + " 2>/dev/null";
  Outcome result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.out.append(buf, n);
  const int status = pclose(pipe);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

std::string scenario(const std::string& name) {
  return "\"" + (fs::path(EVTRACE_SCENARIO_DIR) / (name + ".scn")).string() + "\"";
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("evtrace_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return "\"" + (path / name).string() + "\""; }
};

bool has_line(const std::string& out, const std::string& line) {
  return ("\n" + out).find("\n" + line + "\n") != std::string::npos;
}

}  // namespace

TEST_CASE("count prints per-scenario and overall totals") {
  const auto r = bench("count " + scenario("atunes") + " " + scenario("azureus") + " " +
                       scenario("freemind") + " " + scenario("jedit") + " " + scenario("tuxguitar"));
  CHECK(r.exit_code == 0);
  CHECK(has_line(r.out, "azureus.total=11149"));
  CHECK(has_line(r.out, "azureus.handled=230"));
  CHECK(has_line(r.out, "freemind.total=356762"));
  CHECK(has_line(r.out, "freemind.handled=5308"));
  CHECK(has_line(r.out, "total=575817"));
  CHECK(has_line(r.out, "handled=11004"));
}

TEST_CASE("run, stats, hist, compare and report") {
  TempDir tmp;
  const auto a = tmp.file("a.evtr");
  const auto b = tmp.file("b.evtr");
  const auto c = tmp.file("c.evtr");

  auto r = bench("run --scenario " + scenario("azureus") + " --granularity handled --screenshots off --out " + a);
  REQUIRE(r.exit_code == 0);
  CHECK(has_line(r.out, "traced=230"));
  CHECK(has_line(r.out, "fired=11149"));
  CHECK(has_line(r.out, "config=granularity=HANDLED; ignore=; screenshots=off"));

  r = bench("run --scenario " + scenario("azureus") + " --granularity handled --screenshots off --out " + b);
  REQUIRE(r.exit_code == 0);
  r = bench("run --scenario " + scenario("azureus") +
            " --granularity all --ignore PAINT,MOUSE_MOVED --screenshots on --out " + c);
  REQUIRE(r.exit_code == 0);
  CHECK(has_line(r.out, "config=granularity=ALL; ignore=MOUSE_MOVED,PAINT; screenshots=on"));

  const auto trace = evtrace::load_trace((tmp.path / "a.evtr").string());
  CHECK(trace.events.size() == 230);
  CHECK(trace.samples.size() == 230);

  r = bench("stats " + a);
  CHECK(r.exit_code == 0);
  CHECK(has_line(r.out, "scenario=azureus"));
  CHECK(r.out.find("\nmean_ms=") != std::string::npos);
  CHECK(r.out.find("\ncv=") != std::string::npos);

  r = bench("stats " + a + " --outlier-sigma 0");
  CHECK(r.exit_code == 0);
  CHECK(has_line(r.out, "outliers=0"));
  CHECK(has_line(r.out, "n=230"));

  r = bench("hist " + c);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("bin.NO_SCREENSHOT=") != std::string::npos);

  r = bench("compare " + a + " " + b);
  CHECK(r.exit_code == 0);
  CHECK(has_line(r.out, "equal=true"));

  r = bench("compare " + a + " " + c);
  CHECK(r.exit_code == 1);
  CHECK(has_line(r.out, "equal=false"));
  CHECK(r.out.find("\nposition=") != std::string::npos);

  std::ofstream(tmp.path / "manifest.txt") << "# cells\na.evtr\n\nc.evtr\n";
  r = bench("report " + tmp.file("manifest.txt"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("without screenshot recording") != std::string::npos);
  CHECK(r.out.find("with screenshot recording") != std::string::npos);
  CHECK(r.out.find("cell.azureus.HANDLED.off.n=") != std::string::npos);
}

TEST_CASE("usage and input errors exit with 2") {
  TempDir tmp;
  CHECK(bench("").exit_code == 2);
  CHECK(bench("frobnicate").exit_code == 2);
  CHECK(bench("stats").exit_code == 2);
  CHECK(bench("stats " + tmp.file("missing.evtr")).exit_code == 2);
  CHECK(bench("run --scenario " + scenario("azureus") + " --granularity some --out " + tmp.file("x.evtr"))
            .exit_code == 2);
  CHECK(bench("run --scenario " + scenario("azureus") + " --screenshots maybe --out " + tmp.file("x.evtr"))
            .exit_code == 2);
  CHECK(bench("run --scenario " + tmp.file("none.scn") + " --out " + tmp.file("x.evtr")).exit_code == 2);
  CHECK(bench("run --scenario " + scenario("azureus") + " --ignore HOVER --out " + tmp.file("x.evtr"))
            .exit_code == 2);
  CHECK(bench("run --scenario " + scenario("azureus") + " --endpoint nonsense --out " + tmp.file("x.evtr"))
            .exit_code == 2);
  CHECK(bench("report " + tmp.file("nomanifest.txt")).exit_code == 2);

  std::ofstream(tmp.path / "junk.evtr") << "not a trace";
  CHECK(bench("compare " + tmp.file("junk.evtr") + " " + tmp.file("junk.evtr")).exit_code == 2);
  CHECK(bench("--help").exit_code == 0);
}
