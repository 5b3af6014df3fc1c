#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "fatou/cli.hpp"

namespace fs = std::filesystem;
using fatou::cli::run;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fatou_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("documented invocations") {
  auto d = call({"delta", "--group", "free:2", "--radius", "5", "--method", "four-point", "--exhaustive"});
  CHECK(d.code == 0);
  CHECK(d.out == "0\n");

  auto g = call({"green", "--group", "free:2", "--nu", "srw", "--x", "e", "--y", "e", "--method", "linear",
                 "--radius", "20"});
  CHECK(g.code == 0);
  const double v = std::stod(g.out);
  CHECK(v >= 1.49);
  CHECK(v <= 1.50);

  auto a = call({"admissible"});
  CHECK(a.code == 0);
  CHECK(a.out == "m1=1 l=2 c0=1/4\n");

  auto b = call({"ball", "--radius", "3"});
  CHECK(b.out == "53\n");
}

TEST_CASE("usage errors exit with 2") {
  auto u = call({"frobnicate"});
  CHECK(u.code == 2);
  CHECK(u.err.find("unknown subcommand") != std::string::npos);
  CHECK(u.err.find("Usage") != std::string::npos);
  CHECK(call({}).code == 2);
  CHECK(call({"green", "--radius", "ten"}).code == 2);
  CHECK(call({"green", "--no-such-flag"}).code == 2);
  CHECK(call({"green", "--group", "free:one"}).err.find("field 'group'") != std::string::npos);
  CHECK(call({"green", "--x", "q"}).code == 2);
  CHECK(call({"poisson", "--set", "cone:a"}).code == 2);
  CHECK(call({"nt", "--group", "lattice:2", "--theta", "a"}).code == 2);
  CHECK(call({"admissible", "--nu", "a:1"}).code == 2);
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"theorem", "--help"}).out.find("--n-thetas") != std::string::npos);
}

TEST_CASE("failed checks exit with 1") {
  auto t = call({"theorem", "--n-thetas", "5", "--radius", "10", "--max-censored", "-1"});
  CHECK(t.code == 1);
  auto e = call({"eta-bound", "--points", "a a a", "--eta", "5", "--n-traj", "2000"});
  CHECK(e.code == 1);
}

TEST_CASE("artifacts and determinism") {
  const fs::path a = scratch("a"), b = scratch("b"), c = scratch("c");
  const std::vector<std::string> args{"measure", "--radius", "8", "--n-traj", "3000", "--bin-depth", "2",
                                      "--seed", "11"};
  auto with_out = [&](const fs::path& dir, std::vector<std::string> extra) {
    auto v = args;
    v.push_back("--out");
    v.push_back(dir.string());
    v.insert(v.end(), extra.begin(), extra.end());
    return call(v);
  };
  REQUIRE(with_out(a, {"--workers", "1"}).code == 0);
  REQUIRE(with_out(b, {"--workers", "4"}).code == 0);
  REQUIRE(with_out(c, {"--seed", "12"}).code == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  CHECK(slurp(a / "report.json") != slurp(c / "report.json"));
  CHECK(slurp(a / "tables" / "measure.csv") == slurp(b / "tables" / "measure.csv"));

  const auto report = nlohmann::json::parse(slurp(a / "report.json"));
  const auto meta = nlohmann::json::parse(slurp(a / "metadata.json"));
  CHECK(report["seed"] == 11);
  CHECK(report["config_hash"] == meta["config_hash"]);
  CHECK(report["delta_hat"]["value"] == "0");
  CHECK(report["admissibility"]["l"] == 2);
  CHECK(report["config"]["budgets"]["trajectories"] == 3000);
  CHECK(meta.contains("started_at"));
  CHECK_FALSE(report.dump().find("started_at") != std::string::npos);

  // config.txt reproduces the run.
  const fs::path d = scratch("d");
  REQUIRE(call({"measure", "--config", (a / "config.txt").string(), "--out", d.string()}).code == 0);
  CHECK(slurp(a / "report.json") == slurp(d / "report.json"));
}

TEST_CASE("config files override flags") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  const fs::path cfg = dir / "green.txt";
  std::ofstream(cfg) << "# comment\nradius = 6\n\nmethod = linear\n";
  auto r = call({"green", "--radius", "20", "--config", cfg.string()});
  CHECK(r.code == 0);
  auto plain = call({"green", "--radius", "6"});
  CHECK(r.out == plain.out);

  std::ofstream(cfg) << "radius = 6\ncolour = red\n";
  auto bad = call({"green", "--config", cfg.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("green.txt:2: unknown field 'colour'") != std::string::npos);

  std::ofstream(cfg) << "method = linear\nradius = six\n";
  auto bad_value = call({"green", "--config", cfg.string()});
  CHECK(bad_value.code == 2);
  CHECK(bad_value.err.find("green.txt:2:") != std::string::npos);

  std::ofstream(cfg) << "radius 6\n";
  CHECK(call({"green", "--config", cfg.string()}).err.find("green.txt:1: expected") != std::string::npos);
  CHECK(call({"green", "--config", (dir / "missing.txt").string()}).code == 2);
}

TEST_CASE("seed from the environment") {
  ::setenv(fatou::cli::kSeedVariable, "29", 1);
  const fs::path dir = scratch("env");
  REQUIRE(call({"green", "--method", "mc", "--n-traj", "100", "--radius", "4", "--out", dir.string()}).code == 0);
  ::unsetenv(fatou::cli::kSeedVariable);
  CHECK(nlohmann::json::parse(slurp(dir / "report.json"))["seed"] == 29);
}

TEST_CASE("experiment config round trip") {
  fatou::cli::ExperimentConfig c;
  c.command = "theorem";
  c.group = "fpc:2,3";
  c.nu = "lazy:1/3";
  c.seed = 99;
  c.budgets.trajectories = 17;
  c.params = {{"c", "1,2"}, {"u", "poisson:cyl:a"}};
  const auto back = fatou::cli::ExperimentConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());

  const auto sparse = fatou::cli::ExperimentConfig::from_json(nlohmann::json{{"command", "delta"}});
  CHECK(sparse.budgets.ball_elements == 2'000'000);
  CHECK(sparse.budgets.steps == 10'000'000);
  CHECK(sparse.seed == 1);
  c.seed = 100;
  CHECK(back.hash() != c.hash());
}

TEST_CASE("every subcommand runs") {
  const std::vector<std::vector<std::string>> cases{
      {"martin", "--x", "b", "--y", "a a a a a"},
      {"poisson", "--points", "e,a,b", "--radius", "12"},
      {"poisson", "--method", "mc", "--points", "a", "--radius", "8", "--n-traj", "500"},
      {"condition", "--n-traj", "100", "--exit-radius", "8"},
      {"desintegrate", "--n-outer", "50", "--n-inner", "10", "--exit-radius", "8"},
      {"nt", "--u", "poisson:cyl:a", "--radius", "12"},
      {"stochastic", "--n-traj", "50", "--exit-radius", "8"},
      {"lemma61", "--n-traj", "2000", "--n-rays", "3", "--point-radius", "1"},
      {"lemma62", "--n-points", "5", "--n-traj", "300"},
      {"corollaries", "--n-thetas", "1", "--n-traj", "50"},
      {"eta-bound", "--points", "a a a", "--eta", "0.9", "--n-traj", "300"},
  };
  for (const auto& args : cases) {
    CAPTURE(args[0]);
    auto r = call(args);
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    CHECK_FALSE(r.out.empty());
  }
  auto p = call({"poisson", "--points", "e,a,b", "--radius", "12", "--json"});
  const auto j = nlohmann::json::parse(p.out.substr(p.out.find('{')));
  CHECK(j["result"]["laplacian_residual"].get<double>() <= 1e-9);
}
