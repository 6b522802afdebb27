#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "alphadyn/field_io.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// runs the toolkit binary with stdout and stderr captured
Result run(const std::string& args) {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() / ("alphadyn_cli_" + std::to_string(counter++) + ".log");
  const std::string cmd = std::string("\"") + ALPHADYN_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int st = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  std::ifstream is(log);
  std::stringstream ss;
  ss << is.rdbuf();
  r.out = ss.str();
  fs::remove(log);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("alphadyn_cli_" + name);
  fs::remove_all(d);
  return d;
}

json manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  return json::parse(is);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("version and usage errors") {
    const Result v = run("--version");
    CHECK(v.code == 0);
    CHECK(v.out.find(ALPHADYN_VERSION) != std::string::npos);
    CHECK(run("--help").code == 0);
    CHECK(run("").code == 2);
    CHECK(run("alpha matrix --abc 1,1").code == 2);
    CHECK(run("no-such-command").code == 2);
  }

  TEST_CASE("field make-abc with zero amplitudes") {
    const fs::path d = fresh_dir("zero");
    const Result r = run("field make-abc --abc 0,0,0 --out " + d.string());
    CHECK(r.code == 0);
    const alphadyn::SpectralField f = alphadyn::load_field(d / "abc.field");
    CHECK(f.is_zero());
    const json m = manifest(d);
    CHECK(m["status"] == "ok");
    CHECK(m["version"] == ALPHADYN_VERSION);
    CHECK(m["command"] == "field make-abc");
    CHECK(m.contains("wall_time_s"));
    fs::remove_all(d);
  }

  TEST_CASE("alpha matrix example") {
    const fs::path d = fresh_dir("alpha");
    CHECK(run("alpha matrix --abc 1,1,1 --delta0 0.05 --j 1,0,0 --out " + d.string()).code == 0);
    const json m = manifest(d);
    const auto& ev = m["results"]["eigenvalues"];
    REQUIRE(ev.size() == 3);
    CHECK(ev[0][0].get<double>() == doctest::Approx(0.0025).epsilon(0.01));
    CHECK(std::abs(ev[1][0].get<double>()) < 1e-15);
    CHECK(ev[2][0].get<double>() == doctest::Approx(-0.0025).epsilon(0.01));
    CHECK(fs::exists(d / "alpha_eigenvalues.csv"));
    CHECK(fs::exists(d / "alpha_matrix.csv"));
    fs::remove_all(d);
  }

  TEST_CASE("spectrum kato example") {
    const fs::path d = fresh_dir("kato");
    CHECK(run("spectrum kato --abc 1,1,1 --delta0 0.05 --jmags 0.01,0.005,0.0025 --out " + d.string()).code == 0);
    CHECK(manifest(d)["results"]["slope"].get<double>() >= 1.8);
    fs::remove_all(d);
  }

  TEST_CASE("bad input exits 2 and still writes a manifest") {
    const fs::path d = fresh_dir("bad");
    CHECK(run("alpha matrix --delta0 -1 --out " + d.string()).code == 2);
    const json m = manifest(d);
    CHECK(m["status"] == "config-error");
    CHECK(m["exit_code"] == 2);
    CHECK(m["error"]["code"] == "invalid-argument");
    fs::remove_all(d);
  }

  TEST_CASE("config file with flag precedence") {
    const fs::path d = fresh_dir("config");
    fs::create_directories(d);
    {
      std::ofstream cfg(d / "run.toml");
      cfg << "[alpha.matrix]\nabc = [1, 0.5, 0.2]\ndelta0 = 0.02\nj = [0, 0, 1]\n";
    }
    const fs::path out = d / "out";
    CHECK(run("--config " + (d / "run.toml").string() + " alpha matrix --delta0 0.01 --out " + out.string()).code == 0);
    const json m = manifest(out);
    CHECK(m["results"]["flow"]["delta0"].get<double>() == 0.01);
    CHECK(m["results"]["flow"]["abc"][1].get<double>() == 0.5);
    fs::remove_all(d);
  }

  TEST_CASE("glue build is independent of the worker count") {
    const fs::path a = fresh_dir("w1"), b = fresh_dir("w2");
    const std::string common = "glue build --abc 1,1,1 --delta0 0.05 --tail-C 3079.88 ";
    CHECK(run(common + "--workers 1 --out " + a.string()).code == 0);
    CHECK(run(common + "--workers 2 --out " + b.string()).code == 0);
    std::ifstream ia(a / "catalog.json"), ib(b / "catalog.json");
    std::stringstream sa, sb;
    sa << ia.rdbuf();
    sb << ib.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(run("glue check --catalog " + (a / "catalog.json").string() + " --strict --out " + a.string()).code == 0);
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
