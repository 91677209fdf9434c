#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "spike/io.hpp"

namespace fs = std::filesystem;
using spike::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("spike-cli-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(call({}).code == 2);
  CHECK(call({"no-such-command"}).code == 2);
  CHECK(call({"ground-state", "--n", "two"}).code == 2);
  CHECK(call({"ground-state", "--bogus", "1"}).code == 2);
  Result r = call({"ground-state", "--p", "1.5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/p") != std::string::npos);
}

TEST_CASE("config file errors exit with 2") {
  fs::path dir = scratch("config");
  CHECK(call({"constants", "--config", (dir / "missing.json").string()}).code == 2);
  std::ofstream(dir / "broken.json") << "{\"n\": ";
  CHECK(call({"constants", "--config", (dir / "broken.json").string()}).code == 2);
  std::ofstream(dir / "range.json") << R"({"n": 9})";
  CHECK(call({"constants", "--config", (dir / "range.json").string()}).code == 2);
  std::ofstream(dir / "foreign.json") << R"({"h_mesh": 0.01})";
  Result r = call({"constants", "--config", (dir / "foreign.json").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("/h_mesh") != std::string::npos);
}

TEST_CASE("help exits with 0") {
  Result r = call({"--help-all"});
  CHECK(r.code == 0);
  CHECK(r.out.find("continuation") != std::string::npos);
}

TEST_CASE("ground-state run writes reproducible outputs") {
  fs::path dir = scratch("gs");
  Result a = call({"ground-state", "--n", "1", "--p", "4", "--out", (dir / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("PASS ground-state/closed-form") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "profile.csv"));
  auto doc = spike::json::parse(slurp(dir / "a" / "ground_state.json"));
  CHECK(doc["meta"]["command"] == "ground-state");
  CHECK(doc["meta"]["config"]["n"] == 1);
  CHECK(doc["V0"].get<double>() == doctest::Approx(1.41421356).epsilon(1e-8));

  std::ofstream(dir / "cfg.json") << R"({"n": 1, "p": 4.0, "out": ")" + (dir / "b").string() + R"("})";
  Result b = call({"ground-state", "--n", "3", "--config", (dir / "cfg.json").string()});
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a" / "ground_state.json") == slurp(dir / "b" / "ground_state.json"));
  CHECK(slurp(dir / "a" / "profile.csv") == slurp(dir / "b" / "profile.csv"));
}

TEST_CASE("constants run") {
  fs::path dir = scratch("constants");
  Result r = call({"constants", "--n", "2", "--p", "3", "--out", dir.string()});
  CHECK(r.code == 0);
  auto doc = spike::json::parse(slurp(dir / "constants.json"));
  CHECK(doc["alpha"].get<double>() == doctest::Approx(2.8185780791).epsilon(1e-9));
}

TEST_CASE("numerical failures exit with 1") {
  fs::path dir = scratch("fail");
  Result r = call({"identity-check", "--manifold", "ellipse:2,1", "--h-mesh", "0.05", "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.out.find("MeshTooCoarse") != std::string::npos);
}
