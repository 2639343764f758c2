#include "mottrw/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace mottrw::cli {
namespace {

// Line of the value at a JSON pointer, found by walking the keys in order
// through the raw text. Best effort: 0 when the text is unavailable.
std::size_t line_of(const std::string& text, const std::vector<std::string>& path) {
  if (text.empty()) return 0;
  std::size_t pos = 0;
  for (const std::string& key : path) {
    if (!key.empty() && std::isdigit(static_cast<unsigned char>(key[0]))) continue;
    const std::size_t at = text.find("\"" + key + "\"", pos);
    if (at == std::string::npos) break;
    pos = at + 1;
  }
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) +
         1;
}

class Reader {
 public:
  Reader(const std::string& text, const std::string& origin) : text_(text), origin_(origin) {}

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << origin_;
    if (const std::size_t l = line_of(text_, path_)) os << ":" << l;
    os << ": field " << pointer() << ": " << msg;
    throw ConfigError(os.str());
  }

  std::string pointer() const {
    if (path_.empty()) return "/";
    std::string p;
    for (const auto& k : path_) p += "/" + k;
    return p;
  }

  struct Scope {
    Reader* r;
    ~Scope() { r->path_.pop_back(); }
  };
  Scope enter(const std::string& key) {
    path_.push_back(key);
    return Scope{this};
  }

  void object(const Json& j, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail("expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; })) {
        auto s = enter(it.key());
        std::string list;
        for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
        fail("unknown field (allowed: " + list + ")");
      }
    }
  }

  double number(const Json& j) {
    if (!j.is_number()) fail("expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  std::int64_t integer(const Json& j, std::int64_t lo, std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
    if (!j.is_number_integer()) fail("expected an integer");
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) fail("out of range");
    const auto v = j.get<std::int64_t>();
    if (v < lo || v > hi) fail("must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }
  std::uint64_t unsigned64(const Json& j) {
    if (!j.is_number_unsigned()) fail("expected a non-negative integer");
    return j.get<std::uint64_t>();
  }
  std::string string(const Json& j) {
    if (!j.is_string()) fail("expected a string");
    return j.get<std::string>();
  }
  template <class F>
  void field(const Json& j, const char* key, F&& f) {
    if (!j.contains(key)) return;
    auto s = enter(key);
    f(j.at(key));
  }
  template <class F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

 private:
  const std::string& text_;
  std::string origin_;
  std::vector<std::string> path_;
};

int rho_from(Reader& r, const Json& j) {
  if (j.is_string()) {
    int v = 0;
    r.guarded([&] { v = parse_rho(j.get<std::string>()); });
    return v;
  }
  return static_cast<int>(r.integer(j, 1, std::numeric_limits<int>::max() - 1));
}

void read_environment(Reader& r, const Json& j, EnvironmentSpec& s) {
  r.object(j, {"family", "params", "marks"});
  r.field(j, "family", [&](const Json& v) {
    const std::string name = r.string(v);
    r.guarded([&] {
      const EnvironmentSpec base = parse_family(name);
      if (base.family != s.family) s = base;
    });
  });
  r.field(j, "params", [&](const Json& p) {
    switch (s.family) {
      case Family::kConstantLattice:
        r.object(p, {"d"});
        r.field(p, "d", [&](const Json& v) { s.d = r.number(v); });
        break;
      case Family::kRenewalIid:
        r.object(p, {"d", "law", "mu", "width"});
        r.field(p, "d", [&](const Json& v) { s.d = r.number(v); });
        r.field(p, "law", [&](const Json& v) {
          const std::string law = r.string(v);
          if (law == "exponential") s.renewal_law = RenewalLaw::kExponential;
          else if (law == "uniform") s.renewal_law = RenewalLaw::kUniform;
          else r.fail("law must be exponential or uniform");
        });
        r.field(p, "mu", [&](const Json& v) { s.mu = r.number(v); });
        r.field(p, "width", [&](const Json& v) { s.width = r.number(v); });
        break;
      case Family::kMarkovVelocino:
        r.object(p, {"p", "gamma_mc"});
        r.field(p, "p", [&](const Json& v) { s.p = r.number(v); });
        r.field(p, "gamma_mc", [&](const Json& v) { s.gamma_mc = r.number(v); });
        break;
      case Family::kHeavyTailSorpresa:
        r.object(p, {"gamma_tail"});
        r.field(p, "gamma_tail", [&](const Json& v) { s.gamma_tail = r.number(v); });
        break;
    }
  });
  r.field(j, "marks", [&](const Json& m) {
    r.object(m, {"law", "amplitude"});
    r.field(m, "law", [&](const Json& v) {
      const std::string law = r.string(v);
      if (law == "constant") s.marks = MarkLaw::kConstant;
      else if (law == "uniform") s.marks = MarkLaw::kUniform;
      else r.fail("law must be constant or uniform");
    });
    r.field(m, "amplitude", [&](const Json& v) { s.mark_amplitude = r.number(v); });
  });
  r.guarded([&] { s.validate(); });
}

void read_potential(Reader& r, const Json& j, PotentialSpec& u) {
  r.object(j, {"kind", "beta", "grid_lo", "grid_hi", "values"});
  std::string kind = u.kind == PotentialKind::kZero ? "zero" : u.kind == PotentialKind::kMott ? "mott" : "table";
  r.field(j, "kind", [&](const Json& v) { kind = r.string(v); });
  double beta = u.beta, lo = u.grid_lo, hi = u.grid_hi;
  std::vector<double> values = u.table;
  r.field(j, "beta", [&](const Json& v) { beta = r.number(v); });
  r.field(j, "grid_lo", [&](const Json& v) { lo = r.number(v); });
  r.field(j, "grid_hi", [&](const Json& v) { hi = r.number(v); });
  r.field(j, "values", [&](const Json& v) {
    if (!v.is_array()) r.fail("expected an array of numbers");
    values.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto s = r.enter(std::to_string(i));
      values.push_back(r.number(v[i]));
    }
  });
  auto s = r.enter("kind");
  if (kind == "zero") u = PotentialSpec::zero();
  else if (kind == "mott") r.guarded([&] { u = PotentialSpec::mott(beta); });
  else if (kind == "table") r.guarded([&] { u = PotentialSpec::custom_table(lo, hi, values); });
  else r.fail("kind must be zero, mott or table");
}

void read_walk(Reader& r, const Json& j, WalkConfig& w) {
  r.object(j, {"lambda", "rho", "normalization", "tail_tol", "potential"});
  r.field(j, "lambda", [&](const Json& v) {
    w.lambda = r.number(v);
    if (!(w.lambda >= 0.0 && w.lambda < 1.0)) r.fail("must lie in [0, 1)");
  });
  r.field(j, "rho", [&](const Json& v) { w.rho = rho_from(r, v); });
  r.field(j, "normalization", [&](const Json& v) {
    const std::string n = r.string(v);
    if (n == "lazy") w.normalization = Normalization::kLazy;
    else if (n == "renormalized") w.normalization = Normalization::kRenormalized;
    else r.fail("normalization must be lazy or renormalized");
  });
  r.field(j, "tail_tol", [&](const Json& v) { w.tail_tol = r.number(v); });
  r.field(j, "potential", [&](const Json& v) { read_potential(r, v, w.u); });
  r.guarded([&] { w.validate(); });
}

void read_site_set(Reader& r, const Json& j, SiteSet& s) {
  r.object(j, {"points", "left", "right"});
  SiteSet out;
  r.field(j, "points", [&](const Json& v) {
    if (!v.is_array()) r.fail("expected an array of integers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto sc = r.enter(std::to_string(i));
      out.points.push_back(r.integer(v[i], std::numeric_limits<std::int64_t>::min()));
    }
  });
  r.field(j, "left", [&](const Json& v) { out.left = r.integer(v, std::numeric_limits<std::int64_t>::min()); });
  r.field(j, "right", [&](const Json& v) { out.right = r.integer(v, std::numeric_limits<std::int64_t>::min()); });
  if (out.empty()) r.fail("site set must not be empty");
  s = out;
}

void read_run(Reader& r, const Json& j, RunConfig& c) {
  r.object(j, {"seed", "replicas", "steps", "burn_in", "horizons", "lambda_grid", "cycles", "blocks", "rhos",
               "threads"});
  r.field(j, "seed", [&](const Json& v) { c.seed = r.unsigned64(v); });
  r.field(j, "replicas", [&](const Json& v) { c.replicas = static_cast<std::size_t>(r.integer(v, 2)); });
  r.field(j, "steps", [&](const Json& v) { c.steps = r.integer(v, 1); });
  r.field(j, "burn_in", [&](const Json& v) { c.burn_in = r.integer(v, 0); });
  r.field(j, "horizons", [&](const Json& v) {
    if (!v.is_array() || v.size() < 2) r.fail("expected an array of at least two positive integers");
    c.horizons.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto s = r.enter(std::to_string(i));
      c.horizons.push_back(r.integer(v[i], 1));
    }
  });
  r.field(j, "lambda_grid", [&](const Json& v) {
    if (v.is_string()) {
      r.guarded([&] { c.lambda_grid = parse_grid(v.get<std::string>()); });
      return;
    }
    r.object(v, {"lo", "hi", "step"});
    Grid g = c.lambda_grid;
    r.field(v, "lo", [&](const Json& x) { g.lo = r.number(x); });
    r.field(v, "hi", [&](const Json& x) { g.hi = r.number(x); });
    r.field(v, "step", [&](const Json& x) { g.step = r.number(x); });
    std::ostringstream os;
    os << std::setprecision(17) << g.lo << ":" << g.hi << ":" << g.step;
    r.guarded([&] { c.lambda_grid = parse_grid(os.str()); });
  });
  r.field(j, "cycles", [&](const Json& v) { c.cycles = static_cast<std::size_t>(r.integer(v, 1)); });
  r.field(j, "blocks", [&](const Json& v) { c.blocks = static_cast<std::size_t>(r.integer(v, 1)); });
  r.field(j, "rhos", [&](const Json& v) {
    if (!v.is_array() || v.empty()) r.fail("expected a non-empty array");
    c.rhos.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto s = r.enter(std::to_string(i));
      c.rhos.push_back(rho_from(r, v[i]));
    }
  });
  r.field(j, "threads", [&](const Json& v) { c.threads = static_cast<unsigned>(r.integer(v, 0, 4096)); });
  if (c.burn_in >= c.steps) {
    auto s = r.enter("burn_in");
    r.fail("must be smaller than steps");
  }
}

}  // namespace

Grid parse_grid(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != tok.size()) throw std::invalid_argument("bad lambda grid '" + s + "', expected A:B:STEP");
    parts.push_back(v);
  }
  Grid g;
  if (parts.size() == 1) g = {parts[0], parts[0], 1.0};
  else if (parts.size() == 3) g = {parts[0], parts[1], parts[2]};
  else throw std::invalid_argument("bad lambda grid '" + s + "', expected A:B:STEP");
  if (!(g.step > 0.0) || g.hi < g.lo || g.lo < 0.0 || g.hi >= 1.0)
    throw std::invalid_argument("lambda grid '" + s + "' must satisfy 0 <= A <= B < 1 and STEP > 0");
  return g;
}

EnvironmentSpec parse_family(const std::string& name) {
  if (name == "constant_lattice" || name == "lattice") return EnvironmentSpec::constant_lattice(1.0);
  if (name == "renewal_iid" || name == "renewal") return EnvironmentSpec::renewal_exponential(1.0, 2.0);
  if (name == "markov_velocino" || name == "markov" || name == "velocino") return EnvironmentSpec::markov_velocino(0.3, 1.0);
  if (name == "heavy_tail_sorpresa" || name == "heavy_tail" || name == "sorpresa") return EnvironmentSpec::heavy_tail(1.5);
  throw std::invalid_argument("unknown family '" + name +
                              "' (constant_lattice, renewal_iid, markov_velocino, heavy_tail_sorpresa)");
}

Json environment_json(const EnvironmentSpec& s) {
  Json j;
  j["family"] = to_string(s.family);
  Json p = Json::object();
  switch (s.family) {
    case Family::kConstantLattice: p["d"] = s.d; break;
    case Family::kRenewalIid:
      p["d"] = s.d;
      p["law"] = to_string(s.renewal_law);
      if (s.renewal_law == RenewalLaw::kExponential) p["mu"] = s.mu;
      else p["width"] = s.width;
      break;
    case Family::kMarkovVelocino:
      p["p"] = s.p;
      p["gamma_mc"] = s.gamma_mc;
      break;
    case Family::kHeavyTailSorpresa: p["gamma_tail"] = s.gamma_tail; break;
  }
  j["params"] = p;
  Json m;
  m["law"] = to_string(s.marks);
  if (s.marks == MarkLaw::kUniform) m["amplitude"] = s.mark_amplitude;
  j["marks"] = m;
  return j;
}

Json walk_json(const WalkConfig& w) {
  Json j;
  j["lambda"] = w.lambda;
  if (w.infinite()) j["rho"] = "inf";
  else j["rho"] = w.rho;
  j["normalization"] = w.normalization == Normalization::kLazy ? "lazy" : "renormalized";
  j["tail_tol"] = w.tail_tol;
  Json u;
  switch (w.u.kind) {
    case PotentialKind::kZero: u["kind"] = "zero"; break;
    case PotentialKind::kMott:
      u["kind"] = "mott";
      u["beta"] = w.u.beta;
      break;
    case PotentialKind::kTable:
      u["kind"] = "table";
      u["grid_lo"] = w.u.grid_lo;
      u["grid_hi"] = w.u.grid_hi;
      u["values"] = w.u.table;
      break;
  }
  j["potential"] = u;
  return j;
}

Json site_set_json(const SiteSet& s) {
  Json j = Json::object();
  if (!s.points.empty()) j["points"] = s.points;
  if (s.left) j["left"] = *s.left;
  if (s.right) j["right"] = *s.right;
  return j;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["environment"] = environment_json(c.env);
  j["walk"] = walk_json(c.walk);
  Json r;
  r["seed"] = c.seed;
  r["replicas"] = c.replicas;
  r["steps"] = c.steps;
  r["burn_in"] = c.burn_in;
  r["horizons"] = c.horizons;
  r["lambda_grid"] = {{"lo", c.lambda_grid.lo}, {"hi", c.lambda_grid.hi}, {"step", c.lambda_grid.step}};
  r["cycles"] = c.cycles;
  r["blocks"] = c.blocks;
  Json rh = Json::array();
  for (int v : c.rhos) {
    if (v == kRhoInfinite) rh.push_back("inf");
    else rh.push_back(v);
  }
  r["rhos"] = rh;
  j["run"] = r;
  j["conductance"] = {{"A", site_set_json(c.A)}, {"B", site_set_json(c.B)}};
  return j;
}

void merge(RunConfig& c, const Json& j, const std::string& text, const std::string& origin) {
  Reader r(text, origin);
  r.object(j, {"environment", "walk", "run", "conductance"});
  r.field(j, "environment", [&](const Json& v) { read_environment(r, v, c.env); });
  r.field(j, "walk", [&](const Json& v) { read_walk(r, v, c.walk); });
  r.field(j, "run", [&](const Json& v) { read_run(r, v, c); });
  r.field(j, "conductance", [&](const Json& v) {
    r.object(v, {"A", "B"});
    r.field(v, "A", [&](const Json& s) { read_site_set(r, s, c.A); });
    r.field(v, "B", [&](const Json& s) { read_site_set(r, s, c.B); });
  });
}

void merge_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t at = std::min<std::size_t>(e.byte, text.size());
    const auto nl = std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at ? at - 1 : 0), '\n');
    const std::size_t line_start = text.rfind('\n', at ? at - 1 : 0);
    const std::size_t col = line_start == std::string::npos ? at : at - line_start - 1;
    throw ConfigError(path + ":" + std::to_string(nl + 1) + ":" + std::to_string(col) + ": syntax error: " +
                      e.what());
  }
  merge(c, j, text, path);
}

std::string params_string(const EnvironmentSpec& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  const Json p = environment_json(s)["params"];
  bool first = true;
  for (auto it = p.begin(); it != p.end(); ++it) {
    os << (first ? "" : ";") << it.key() << "=";
    if (it->is_string()) os << it->get<std::string>();
    else os << it->get<double>();
    first = false;
  }
  if (s.marks == MarkLaw::kUniform) os << ";marks=uniform(" << s.mark_amplitude << ")";
  return os.str();
}

}  // namespace mottrw::cli
