#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mottrw::acceptance {

enum class Suite { kFast, kFull };
Suite parse_suite(const std::string& s);
std::string to_string(Suite s);

struct Options {
  Suite suite = Suite::kFast;
  std::uint64_t seed = 20240611;
  unsigned threads = 0;
};

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  bool within_budget = true;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;  // measured quantities, one line
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Result(const Options&)> run;
};

const std::vector<Criterion>& criteria();

// Runs the selected ids (all when empty), timing each one. A result passes
// only if its checks hold and it finished inside its budget.
std::vector<Result> run(const Options& opts, const std::vector<int>& ids = {}, std::ostream* progress = nullptr);

// "PASS  [ 1] name  (1.2 s / 60 s)  detail"
std::string format(const Result& r);

}  // namespace mottrw::acceptance
