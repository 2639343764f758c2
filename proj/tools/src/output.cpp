#include "mottrw/cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace mottrw::cli {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string Manifest::config_hash() const { return hex64(fnv1a64(command + "\n" + config.dump())); }

Json Manifest::to_json() const {
  Json j;
  j["tool"] = "mottrw";
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config_hash"] = config_hash();
  j["config"] = config;
  return j;
}

Manifest Manifest::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("command") || !j.contains("config") || !j.contains("seed"))
    throw ConfigError("manifest: expected command, seed and config fields");
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("config_hash") && j.at("config_hash").get<std::string>() != m.config_hash())
    throw ConfigError("manifest: config_hash does not match the embedded config");
  return m;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open manifest");
  try {
    return from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const Manifest& m, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), columns_(columns.size()), path_(path) {
  if (!out_) throw std::runtime_error(path + ": cannot open for writing");
  out_ << "# mottrw " << kVersion << " command=" << m.command << " seed=" << m.seed
       << " config_hash=" << m.config_hash() << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::cell(const std::string& s) {
  if (filled_ == columns_) throw std::logic_error(path_ + ": too many cells in row");
  out_ << (filled_ ? "," : "");
  if (s.find_first_of(",\"\n") != std::string::npos) {
    out_ << '"';
    for (char c : s) out_ << (c == '"' ? "\"\"" : std::string(1, c));
    out_ << '"';
  } else {
    out_ << s;
  }
  ++filled_;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  cell(s);
  return *this;
}
CsvWriter& CsvWriter::operator<<(double v) {
  cell(format_double(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(std::int64_t v) {
  cell(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(std::uint64_t v) {
  cell(std::to_string(v));
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error(path_ + ": incomplete row");
  out_ << "\n";
  filled_ = 0;
}

JsonlWriter::JsonlWriter(const std::string& path, const Manifest& m) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error(path + ": cannot open for writing");
  write(Json{{"manifest", m.to_json()}});
}

void JsonlWriter::write(const Json& record) { out_ << record.dump() << "\n"; }

void prepare_output(const std::string& dir, const Manifest& m) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error(dir + ": cannot write manifest.json");
  out << m.to_json().dump(2) << "\n";
}

}  // namespace mottrw::cli
