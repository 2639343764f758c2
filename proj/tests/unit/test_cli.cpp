#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mottrw/cli/app.hpp"
#include "mottrw/cli/config.hpp"
#include "mottrw/cli/output.hpp"

using namespace mottrw::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mottrw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mottrw_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("invalid configurations exit with code 1 and point at the field", "[cli]") {
  const auto range = write_file("range.json", "{\n  \"walk\": {\n    \"lambda\": 1.5\n  }\n}\n");
  Outcome o = invoke({"simulate", "--config", range.string()});
  CHECK(o.code == kValidationError);
  CHECK(o.err.find("range.json:3") != std::string::npos);
  CHECK(o.err.find("/walk/lambda") != std::string::npos);

  const auto unknown = write_file("unknown.json", "{\n  \"run\": {\"seed\": 1},\n  \"bogus\": 1\n}\n");
  o = invoke({"simulate", "--config", unknown.string()});
  CHECK(o.code == kValidationError);
  CHECK(o.err.find("unknown.json:3") != std::string::npos);
  CHECK(o.err.find("/bogus") != std::string::npos);

  const auto syntax = write_file("syntax.json", "{\n  \"run\": {\n");
  o = invoke({"simulate", "--config", syntax.string()});
  CHECK(o.code == kValidationError);
  CHECK(o.err.find("syntax") != std::string::npos);

  CHECK(invoke({"simulate", "--rho", "0"}).code == kValidationError);
  CHECK(invoke({"simulate", "--lambda", "-0.1"}).code == kValidationError);
  CHECK(invoke({"simulate", "--family", "nope"}).code == kValidationError);
  CHECK(invoke({"frobnicate"}).code == kValidationError);
}

TEST_CASE("config validation rejects bad types and values", "[cli]") {
  RunConfig c;
  CHECK_THROWS_AS(merge(c, Json::parse(R"({"run": {"replicas": "many"}})")), ConfigError);
  CHECK_THROWS_AS(merge(c, Json::parse(R"({"run": {"replicas": 0}})")), ConfigError);
  CHECK_THROWS_AS(merge(c, Json::parse(R"({"walk": {"rho": -2}})")), ConfigError);
  CHECK_THROWS_AS(merge(c, Json::parse(R"({"environment": {"family": "heavy_tail_sorpresa", "params": {"gamma_tail": 0.5}}})")),
                  ConfigError);
  RunConfig d;
  merge(d, to_json(d));
  CHECK(to_json(d) == to_json(RunConfig{}));
  CHECK(parse_grid("0.1:0.9:0.1").step == Catch::Approx(0.1));
  CHECK_THROWS(parse_grid("0.1:0.9"));
}

TEST_CASE("manifest round-trips and reruns reproduce the output byte for byte", "[cli]") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
  const std::vector<std::string> common = {"simulate", "--replicas", "6", "--steps", "3000", "--rho", "3", "--seed", "9"};
  auto with = [&](const fs::path& out, const std::string& threads) {
    auto v = common;
    v.insert(v.end(), {"--out", out.string(), "--threads", threads});
    return v;
  };
  REQUIRE(invoke(with(a, "1")).code == kOk);
  REQUIRE(invoke(with(b, "3")).code == kOk);
  CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));
  CHECK(slurp(a / "simulate.jsonl") == slurp(b / "simulate.jsonl"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  const Manifest m = Manifest::load((a / "manifest.json").string());
  CHECK(m.command == "simulate");
  CHECK(m.seed == 9);
  CHECK(Manifest::from_json(m.to_json()).config_hash() == m.config_hash());
  CHECK(m.config_hash() == hex64(fnv1a64("simulate\n" + m.config.dump())));
  CHECK(m.config.dump().find("threads") == std::string::npos);

  REQUIRE(invoke({"simulate", "--manifest", (a / "manifest.json").string(), "--out", c.string()}).code == kOk);
  CHECK(slurp(a / "simulate.csv") == slurp(c / "simulate.csv"));
}

TEST_CASE("csv cells round-trip doubles", "[cli]") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("sweep writes one row per grid point", "[cli]") {
  const fs::path out = scratch("sweep");
  const Outcome o = invoke({"sweep", "--family", "heavy_tail", "--gamma", "1.5", "--lambda", "0.1:0.9:0.1", "--replicas",
                            "4", "--horizons", "1000,10000", "--out", out.string(), "--threads", "1"});
  REQUIRE(o.code == kOk);
  std::istringstream csv(slurp(out / "sweep.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(csv, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0].find("discontinuity") != std::string::npos);
  CHECK(rows[1].find("subballistic") != std::string::npos);
  CHECK(rows[9].find(",ballistic,") != std::string::npos);
}
