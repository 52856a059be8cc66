#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"

using namespace rdcert;
using namespace rdcert::app;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rdcert");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("rdcert_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    std::atexit([] { fs::remove_all(fs::temp_directory_path() / ("rdcert_cli_" + std::to_string(::getpid()))); });
    return d;
  }();
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

bool has(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

const char* kGoodwin = R"({"model": {"name": "goodwin"}, "spatial": {"lambda2": 0.06},
  "method": "composite", "structure": "diagonal"})";

const char* kFhnNet = R"({"model": {"name": "fhn"}, "coupling": {"d": [3, 1]},
  "spatial": {"graph": {"builtin": "path", "n": 3}},
  "simulation": {"t_end": 50, "output_dt": 0.1, "certify": true,
                 "init": {"kind": "random", "lo": [-1, -1], "hi": [1, 1], "seed": 11}}})";

}  // namespace

TEST_CASE("certify: Goodwin composite diagonal above threshold") {
  const auto r = run({"certify", "--config", write("gw.json", kGoodwin)});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "status: feasible"));
  CHECK(has(r.out, "secant criterion"));
  CHECK(has(r.out, "agrees with the LMI"));
  CHECK(has(r.out, "config value (may be a lower bound)"));
}

TEST_CASE("certify: Goodwin below threshold is infeasible") {
  const auto r = run({"certify", "--config", write("gw.json", kGoodwin), "--lambda2", "0.05"});
  CHECK(r.code == kExitFailed);
  CHECK(has(r.out, "command-line override"));
  CHECK(has(r.out, "agrees with the LMI"));
}

TEST_CASE("certify: Othmer condition fails for Goodwin at lambda2 min d = 1") {
  const auto r = run({"certify", "--config", write("gw.json", kGoodwin), "--method", "othmer", "--lambda2", "1"});
  CHECK(r.code == kExitFailed);
  CHECK(has(r.out, "9.05539"));
  const auto ok = run({"certify", "--config", write("gw.json", kGoodwin), "--method", "othmer", "--lambda2", "9.1"});
  CHECK(ok.code == kExitOk);
}

TEST_CASE("certify: secant method and its restrictions") {
  const auto gw = write("gw.json", kGoodwin);
  CHECK(run({"certify", "--config", gw, "--method", "secant"}).code == kExitOk);
  CHECK(run({"certify", "--config", gw, "--method", "secant", "--lambda2", "0.054"}).code == kExitFailed);
  const auto bad = run({"certify", "--config", gw, "--method", "secant", "--structure", "full"});
  CHECK(bad.code == kExitError);
  CHECK(has(bad.err, "/structure"));
  const auto fhn = run({"certify", "--config", write("fhn.json", kFhnNet), "--method", "secant"});
  CHECK(fhn.code == kExitError);
  CHECK(has(fhn.err, "cyclic"));
}

TEST_CASE("certify: FHN vertex with the explicit certificate") {
  const auto r = run({"certify", "--config", write("fhn.json", kFhnNet)});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "explicit P = diag(1/c, c): valid"));
  const auto weak = run({"certify", "--config", write("fhn.json", kFhnNet), "--lambda2", "0.5"});
  CHECK(has(weak.out, "refused"));
}

TEST_CASE("threshold and compare for Goodwin") {
  const auto gw = write("gw_t.json", R"({"model": {"name": "goodwin"}, "method": "vertex",
    "threshold": {"lo": 0.04, "hi": 0.07, "tol": 1e-5, "structures": ["full", "diagonal"]}})");
  const auto rep = (scratch() / "thr.json").string();
  const auto r = run({"threshold", "--config", gw, "--out", rep});
  REQUIRE(r.code == kExitOk);
  const auto j = read_json(rep);
  REQUIRE(j["results"].size() == 2);
  CHECK(std::abs(j["results"][0]["lambda2_star"].get<double>() - 0.05425) < 1e-3);
  // diagonal P can only be more conservative
  CHECK(j["results"][1]["lambda2_star"].get<double>() >= j["results"][0]["lambda2_star"].get<double>() - 1e-5);

  const auto c = run({"compare", "--config", write("gw.json", kGoodwin)});
  CHECK(c.code == kExitOk);
  CHECK(has(c.out, "othmer"));
  CHECK(has(c.out, "9.055391"));
  CHECK(has(c.out, "secant"));
  CHECK(has(c.out, "composite"));
}

TEST_CASE("threshold: bracket errors exit 1") {
  const auto gw = write("gw_b.json", R"({"model": {"name": "goodwin"}, "method": "secant",
    "threshold": {"lo": 0.06, "hi": 0.07}})");
  const auto r = run({"threshold", "--config", gw});
  CHECK(r.code == kExitError);
  CHECK(has(r.out, "lower end"));
}

TEST_CASE("spectral subcommand") {
  auto r = run({"spectral", "--interval", "1"});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "9.86960440109"));

  r = run({"spectral", "--edges", write("p3.txt", "# path\n0 1\n1 2\n")});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "lambda2 = 1 "));

  r = run({"spectral", "--edges", write("c3.txt", "0 1\n1 2\n2 0\n"), "--directed"});
  CHECK(has(r.out, "lambda2 = 1.5 "));

  r = run({"spectral", "--edges", write("split.txt", "0 1\n2 3\n")});
  CHECK(has(r.out, "disconnected"));

  const auto cfg = write("dom.json", R"({"spatial": {"domain": {"kind": "rectangle", "lx": 1, "ly": 2}}})");
  r = run({"spectral", "--config", cfg});
  CHECK(has(r.out, "2.46740110027"));

  CHECK(run({"spectral"}).code == kExitError);
  CHECK(run({"spectral", "--interval", "1", "--edges", "x"}).code == kExitError);
}

TEST_CASE("config errors carry the JSON path") {
  auto r = run({"certify", "--config", write("e1.json", R"({"model": {"name": "goodwin", "params": {"a1": -1}}})")});
  CHECK(r.code == kExitError);
  CHECK(has(r.err, "/model/params"));

  r = run({"certify", "--config", write("e2.json", R"({"model": {"name": "fhn"}, "coupling": {"d": [1]}})")});
  CHECK(r.code == kExitError);
  CHECK(has(r.err, "/coupling/d"));

  r = run({"certify", "--config", write("e3.json", R"({"model": {"name": "fhn"}, "spatial": {"lambda2": 1},
    "extra": 1})")});
  CHECK(r.code == kExitError);
  CHECK(has(r.err, "extra"));

  r = run({"certify", "--config", write("e4.json", "{not json")});
  CHECK(r.code == kExitError);

  r = run({"certify", "--config", (scratch() / "missing.json").string()});
  CHECK(r.code == kExitError);

  r = run({"certify", "--config", write("e5.json", R"({"model": {"name": "fhn"}})")});
  CHECK(r.code == kExitError);
  CHECK(has(r.err, "/spatial"));
}

TEST_CASE("random initial states need a seed") {
  const auto cfg = write("noseed.json", R"({"model": {"name": "fhn"}, "coupling": {"d": [3, 1]},
    "spatial": {"graph": {"builtin": "path", "n": 3}},
    "simulation": {"t_end": 1, "init": {"kind": "random", "lo": [-1, -1], "hi": [1, 1]}}})");
  const auto r = run({"simulate-net", "--config", cfg});
  CHECK(r.code == kExitError);
  CHECK(has(r.err, "seed"));
  CHECK(run({"simulate-net", "--config", cfg, "--seed", "5"}).code == kExitOk);
}

TEST_CASE("round trip through the echoed config") {
  for (const auto& cmd : {"certify", "threshold"}) {
    const auto cfg = write("rt.json", R"({"model": {"name": "goodwin"}, "spatial": {"lambda2": 0.06},
      "method": "composite", "structure": "full", "threshold": {"lo": 0.04, "hi": 0.07}})");
    const auto rep1 = (scratch() / "rt1.json").string(), rep2 = (scratch() / "rt2.json").string();
    const auto a = run({cmd, "--config", cfg, "--lambda2", "0.07", "--out", rep1});
    const auto first = read_json(rep1);
    const auto echoed = write("rt_echo.json", first["config"].dump());
    const auto b = run({cmd, "--config", echoed, "--out", rep2});
    CHECK(a.code == b.code);
    // only the provenance of lambda2 may differ (override vs config value)
    auto first_num = first, second = read_json(rep2);
    first_num.erase("lambda2_source");
    second.erase("lambda2_source");
    CHECK(first_num == second);
    if (std::string(cmd) == "certify") CHECK(has(a.out, "command-line override"));
  }
}

TEST_CASE("exit codes do not depend on --out") {
  const auto gw = write("gw.json", kGoodwin);
  for (const char* l2 : {"0.06", "0.05"}) {
    const auto a = run({"certify", "--config", gw, "--lambda2", l2});
    const auto b = run({"certify", "--config", gw, "--lambda2", l2, "--out", (scratch() / "x.json").string()});
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("simulate-net: certified FHN synchronizes") {
  const auto csv = (scratch() / "fhn.csv").string();
  const auto r = run({"simulate-net", "--config", write("fhn.json", kFhnNet), "--out", csv});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "sync confirmed"));
  CHECK(has(r.out, "V nonincreasing after t = 10 (down to 1e-16 V(0)): yes"));
  std::ifstream in(csv);
  std::string head;
  std::getline(in, head);
  CHECK(head == "t,mean_0,mean_1,nonuniformity,sync_error,lyapunov");

  const auto dir = write("fhn_dir.json", R"({"model": {"name": "fhn"}, "coupling": {"d": [1.5, 2]},
    "spatial": {"graph": {"builtin": "cycle", "n": 3, "directed": true}},
    "simulation": {"t_end": 50, "certificate": "fhn_dir_cert.json",
                   "init": {"kind": "random", "lo": [-1, -1], "hi": [1, 1], "seed": 2}}})");
  write("fhn_dir_cert.json", R"({"p": [[1, 0], [0, 0.75]], "epsilon": 0})");
  const auto d = run({"simulate-net", "--config", dir});
  CHECK(d.code == kExitOk);
  CHECK(has(d.out, "P D symmetric (needed for directed graphs): yes"));
  CHECK(has(d.out, "sync confirmed"));
}

TEST_CASE("simulate-pde: pure diffusion and certified Goodwin") {
  const auto heat = write("heat.json", R"({"model": {"name": "linear", "a": [[0]]},
    "spatial": {"domain": {"kind": "interval", "length": 3.141592653589793}},
    "simulation": {"t_end": 3, "m": 256, "output_dt": 0.05, "fit_window": [0.5, 3],
                   "init": {"kind": "cosine", "base": [0], "amplitude": 1}}})");
  const auto r = run({"simulate-pde", "--config", heat});
  REQUIRE(r.code == kExitOk);
  const auto pos = r.out.find("fitted rate of nonuniformity");
  REQUIRE(pos != std::string::npos);
  const double rate = std::stod(r.out.substr(r.out.find("]: ", pos) + 3));
  CHECK(std::abs(rate + 1.0) < 0.02);

  const auto gw = write("gwp.json", R"({"model": {"name": "goodwin"}, "spatial": {"lambda2": 0.0815},
    "method": "composite", "structure": "diagonal",
    "simulation": {"t_end": 400, "dt": 0.05, "output_dt": 1, "m": 64, "certify": true,
                   "init": {"kind": "cosine", "base": [0.5, 0.5, 0.5], "amplitude": 0.1}}})");
  const auto g = run({"simulate-pde", "--config", gw});
  CHECK(g.code == kExitOk);
  CHECK(has(g.out, "decay confirmed"));
  CHECK(has(g.out, "certified bound on the V decay rate"));
}

TEST_CASE("simulate-pde: blow-up still exits 0") {
  const auto cfg = write("blow.json", R"({"model": {"name": "linear", "a": [[5]]}, "simulation": {"t_end": 10,
    "length": 1, "m": 16, "init": {"kind": "cosine", "base": [1], "amplitude": 0.1}}})");
  const auto r = run({"simulate-pde", "--config", cfg});
  CHECK(r.code == kExitOk);
  CHECK(has(r.out, "blew up"));
}
