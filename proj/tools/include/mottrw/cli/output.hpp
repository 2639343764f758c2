#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mottrw/cli/config.hpp"

namespace mottrw::cli {

inline constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Identifies a run: the resolved configuration and its hash. Thread counts
// are excluded since they never change results.
struct Manifest {
  std::string command;
  Json config;
  std::uint64_t seed = 0;

  std::string config_hash() const;
  Json to_json() const;
  static Manifest from_json(const Json& j);
  static Manifest load(const std::string& path);
};

// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const Manifest& m, const std::vector<std::string>& columns);
  CsvWriter& operator<<(const std::string& s);
  CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(std::int64_t v);
  CsvWriter& operator<<(std::uint64_t v);
  CsvWriter& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
  CsvWriter& operator<<(bool v) { return *this << static_cast<std::int64_t>(v ? 1 : 0); }
  void end_row();

 private:
  void cell(const std::string& s);
  std::ofstream out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
  std::string path_;
};

// First record is {"manifest": ...}.
class JsonlWriter {
 public:
  JsonlWriter(const std::string& path, const Manifest& m);
  void write(const Json& record);

 private:
  std::ofstream out_;
};

// Creates the directory and writes manifest.json into it.
void prepare_output(const std::string& dir, const Manifest& m);

}  // namespace mottrw::cli
