#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/network.hpp"

namespace mottrw::cli {

using Json = nlohmann::ordered_json;

// Validation failure; what() is the full diagnostic ("file:line: field /a/b: ...").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Grid {
  double lo = 0.1, hi = 0.9, step = 0.1;
};
Grid parse_grid(const std::string& s);  // "A:B:STEP" or a single value

struct RunConfig {
  EnvironmentSpec env = EnvironmentSpec::renewal_exponential(1.0, 2.0);
  WalkConfig walk;
  std::uint64_t seed = 42;
  std::size_t replicas = 16;
  std::int64_t steps = 100000;
  std::int64_t burn_in = 0;
  std::vector<std::int64_t> horizons = {10000, 100000, 1000000};
  Grid lambda_grid;
  std::size_t cycles = 256;              // regen: cycles per run
  std::size_t blocks = 500;              // subballistic: blocks per replica
  std::vector<int> rhos = {1, 2, 4, 8};  // conductance
  SiteSet A = SiteSet::point(0);
  SiteSet B = SiteSet::outside(-16, 16);
  unsigned threads = 0;                  // never part of the manifest
};

// Everything that determines results, with defaults filled in.
Json to_json(const RunConfig& c);

// Strict merge of a JSON document into c. Unknown keys, wrong types and
// out-of-range values raise ConfigError naming the field; `text` (the raw
// document) and `origin` are used to report line numbers.
void merge(RunConfig& c, const Json& j, const std::string& text = {}, const std::string& origin = "config");

// Parses and merges a file; syntax errors report line and column.
void merge_file(RunConfig& c, const std::string& path);

Json environment_json(const EnvironmentSpec& s);
Json walk_json(const WalkConfig& w);
Json site_set_json(const SiteSet& s);

EnvironmentSpec parse_family(const std::string& name);  // short or full family name

// One-line parameter summary, e.g. "d=1;law=exponential;mu=2".
std::string params_string(const EnvironmentSpec& s);

}  // namespace mottrw::cli
