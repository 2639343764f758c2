#include "mottrw/cli/app.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mottrw/acceptance.hpp"
#include "mottrw/cli/config.hpp"
#include "mottrw/cli/output.hpp"
#include "mottrw/criteria.hpp"
#include "mottrw/evm.hpp"
#include "mottrw/parallel.hpp"
#include "mottrw/regen.hpp"
#include "mottrw/stats.hpp"
#include "mottrw/walk.hpp"

namespace mottrw::cli {
namespace {

// Raw flag values; empty optionals were not given.
struct Flags {
  std::string config, manifest, out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas, cycles, blocks;
  std::optional<std::int64_t> steps, burn_in;
  std::optional<std::string> lambda, rho, family, horizons;
  std::optional<double> gamma, mu, d;
  std::optional<unsigned> threads;
  std::string suite = "fast";
  std::vector<int> only;
};

std::vector<std::int64_t> parse_horizons(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != tok.size() || v < 1) throw ConfigError("--horizons: expected positive integers, got '" + s + "'");
    out.push_back(v);
  }
  if (out.size() < 2) throw ConfigError("--horizons: need at least two horizons");
  return out;
}

void apply_flags(RunConfig& c, const Flags& f, const std::string& command) {
  try {
    if (f.family) c.env = parse_family(*f.family);
    if (f.gamma) {
      if (c.env.family == Family::kHeavyTailSorpresa) c.env.gamma_tail = *f.gamma;
      else if (c.env.family == Family::kMarkovVelocino) c.env.gamma_mc = *f.gamma;
      else throw ConfigError("--gamma applies to heavy_tail_sorpresa and markov_velocino only");
    }
    if (f.mu) {
      if (c.env.family != Family::kRenewalIid) throw ConfigError("--mu applies to renewal_iid only");
      c.env.mu = *f.mu;
    }
    if (f.d) {
      if (c.env.family != Family::kRenewalIid && c.env.family != Family::kConstantLattice)
        throw ConfigError("--d applies to constant_lattice and renewal_iid only");
      c.env.d = *f.d;
    }
    if (f.seed) c.seed = *f.seed;
    if (f.replicas) c.replicas = *f.replicas;
    if (f.steps) c.steps = *f.steps;
    if (f.burn_in) c.burn_in = *f.burn_in;
    if (f.cycles) c.cycles = *f.cycles;
    if (f.blocks) c.blocks = *f.blocks;
    if (f.horizons) c.horizons = parse_horizons(*f.horizons);
    if (f.rho) {
      c.walk.rho = parse_rho(*f.rho);
      c.rhos = {c.walk.rho};
    }
    if (f.lambda) {
      const Grid g = parse_grid(*f.lambda);
      if (command == "sweep") {
        c.lambda_grid = g;
      } else {
        if (g.lo != g.hi) throw ConfigError("--lambda: a grid is only accepted by sweep");
        c.walk.lambda = g.lo;
      }
    }
    if (f.threads) c.threads = *f.threads;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

void validate(const RunConfig& c, const std::string& command) {
  try {
    c.env.validate();
    c.walk.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (c.replicas < 2) throw ConfigError("replicas must be at least 2");
  if (c.burn_in >= c.steps) throw ConfigError("burn_in must be smaller than steps");
  if (command == "regen" && c.walk.infinite()) throw ConfigError("regen needs a finite rho (--rho N)");
  if (command == "subballistic" && !c.walk.infinite()) throw ConfigError("subballistic needs rho = inf");
  if (command == "sweep" && !(c.lambda_grid.lo > 0.0)) throw ConfigError("sweep: lambda grid must start above 0");
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::int64_t window_hi(const Kernel& k) { return k.s_star() + 4096; }

int cmd_simulate(const RunConfig& c, const Manifest& m, const std::string& dir, std::ostream& out) {
  const Kernel k(c.walk, c.env);
  struct Rec {
    TrajectoryStats st;
    double position = 0.0, start_index = 0.0, start_position = 0.0;
  };
  std::vector<Rec> recs(c.replicas);
  parallel_for(c.replicas, resolve_threads(c.threads), [&](std::size_t r) {
    Environment env(c.env, environment_seed(c.seed, r), {-k.s_star() - 256, window_hi(k)});
    StatRequest req;
    req.checkpoints = {c.burn_in};
    recs[r].st = simulate_discrete(env, k, 0, c.steps, c.seed, r, req);
    recs[r].position = env.x(recs[r].st.final_index);
    recs[r].start_index = static_cast<double>(recs[r].st.checkpoint_index[0]);
    recs[r].start_position = env.x(recs[r].st.checkpoint_index[0]);
  });
  JsonlWriter jl(path_in(dir, "simulate.jsonl"), m);
  const double span = static_cast<double>(c.steps - c.burn_in);
  std::vector<double> v(c.replicas), vp(c.replicas);
  for (std::size_t r = 0; r < c.replicas; ++r) {
    const auto& rc = recs[r];
    v[r] = (static_cast<double>(rc.st.final_index) - rc.start_index) / span;
    vp[r] = (rc.position - rc.start_position) / span;
    jl.write({{"replica", r},
              {"environment_seed", environment_seed(c.seed, r)},
              {"steps", rc.st.steps},
              {"final_index", rc.st.final_index},
              {"final_position", rc.position},
              {"v_index", v[r]},
              {"v_position", vp[r]},
              {"self_loops", rc.st.self_loops},
              {"max_abs_jump", rc.st.max_abs_jump}});
  }
  const Summary s = summarize(v), sp = summarize(vp);
  CsvWriter csv(path_in(dir, "simulate.csv"), m,
                {"family", "params", "lambda", "rho", "v_hat", "stderr", "v_position", "stderr_position", "steps",
                 "burn_in", "replicas", "seed"});
  csv << to_string(c.env.family) << params_string(c.env) << c.walk.lambda << rho_to_string(c.walk.rho) << s.mean
      << s.stderr_ << sp.mean << sp.stderr_ << c.steps << c.burn_in << c.replicas << c.seed;
  csv.end_row();
  out << "v_hat = " << format_double(s.mean) << " +- " << format_double(s.stderr_) << " (" << c.replicas
      << " replicas x " << c.steps << " steps)\n";
  return kOk;
}

int cmd_sweep(const RunConfig& c, const Manifest& m, const std::string& dir, std::ostream& out) {
  const std::vector<double> grid = lambda_grid(c.lambda_grid.lo, c.lambda_grid.hi, c.lambda_grid.step);
  const PhaseSweep sw = phase_sweep(c.env, c.walk, grid, c.horizons, c.replicas, c.seed, c.threads);
  JsonlWriter jl(path_in(dir, "sweep.jsonl"), m);
  CsvWriter csv(path_in(dir, "sweep.csv"), m,
                {"family", "params", "lambda", "rho", "horizon", "v_hat", "stderr", "analytic_class", "trend",
                 "decay_per_decade", "boundary", "discontinuity"});
  for (std::size_t i = 0; i < sw.points.size(); ++i) {
    const PhasePoint& p = sw.points[i];
    Json prof = Json::array();
    for (const auto& e : p.profile)
      prof.push_back({{"horizon", e.steps}, {"v_hat", e.v}, {"stderr", e.stderr_}});
    jl.write({{"lambda", p.lambda},
              {"analytic_class", to_string(p.analytic.regime)},
              {"rationale", p.analytic.rationale},
              {"trend", to_string(p.trend.sign)},
              {"decay_per_decade", p.trend.decay_per_decade},
              {"loglog_slope", p.trend.loglog_slope},
              {"consistent", p.consistent},
              {"profile", prof}});
    const bool boundary = sw.discontinuity && (p.lambda == sw.boundary_lo || p.lambda == sw.boundary_hi);
    const VelocityEstimate& last = p.profile.back();
    csv << to_string(c.env.family) << params_string(c.env) << p.lambda << rho_to_string(p.rho) << last.steps
        << last.v << last.stderr_ << to_string(p.analytic.regime) << to_string(p.trend.sign)
        << p.trend.decay_per_decade << boundary << sw.discontinuity;
    csv.end_row();
    out << "lambda=" << p.lambda << " v_hat=" << format_double(last.v) << " class=" << to_string(p.analytic.regime)
        << " trend=" << to_string(p.trend.sign) << "\n";
  }
  if (sw.discontinuity)
    out << "discontinuity between lambda=" << sw.boundary_lo << " and lambda=" << sw.boundary_hi << "\n";
  return kOk;
}

int cmd_conductance(const RunConfig& c, const Manifest& m, const std::string& dir, std::ostream& out) {
  WalkConfig w = c.walk;
  w.rho = kRhoInfinite;
  const Kernel k(w, c.env);
  JsonlWriter jl(path_in(dir, "conductance.jsonl"), m);
  CsvWriter csv(path_in(dir, "conductance.csv"), m, {"replica", "query", "rho", "N_final", "value"});
  const std::string query = c.A.describe() + " <-> " + c.B.describe();
  for (std::size_t r = 0; r < c.replicas; ++r) {
    Environment env(c.env, environment_seed(c.seed, r), {-64, 64});
    for (int rho : c.rhos) {
      NetworkQuery q;
      q.A = c.A;
      q.B = c.B;
      q.rho = rho;
      const ConductanceResult res = eff_conductance(env, k, q);
      csv << r << query << rho_to_string(rho) << res.half_width << res.value;
      csv.end_row();
      jl.write({{"replica", r},
                {"rho", rho_to_string(rho)},
                {"value", res.value},
                {"previous", res.previous},
                {"half_width", res.half_width},
                {"window", {res.window.lo, res.window.hi}},
                {"residual", res.residual},
                {"exact_window", res.exact_window},
                {"bandwidth", res.bandwidth}});
    }
  }
  out << "wrote " << c.replicas * c.rhos.size() << " conductance rows for " << query << "\n";
  return kOk;
}

int cmd_regen(const RunConfig& c, const Manifest& m, const std::string& dir, std::ostream& out) {
  const std::vector<CoupledRun> runs = coupled_runs(c.env, c.walk, c.replicas, c.cycles, c.seed, c.threads);
  const RegenerationSpeed rs = regeneration_speed(runs);
  JsonlWriter jl(path_in(dir, "regen.jsonl"), m);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const CoupledRun& run = runs[r];
    for (std::size_t i = 0; i < run.cycle_blocks.size(); ++i)
      jl.write({{"run", r},
                {"cycle", i},
                {"level", run.levels[i]},
                {"time", run.times[i]},
                {"blocks", run.cycle_blocks[i]},
                {"duration", run.cycle_durations[i]},
                {"visits", run.cycle_visits[i]}});
  }
  CsvWriter csv(path_in(dir, "regen.csv"), m,
                {"lambda", "rho", "epsilon", "runs", "cycles", "v_regen", "stderr", "ratio_v", "ratio_stderr",
                 "mean_duration", "mean_blocks", "seed"});
  csv << c.walk.lambda << rho_to_string(c.walk.rho) << runs.front().epsilon << runs.size() << rs.cycles << rs.v
      << rs.stderr_ << rs.ratio_v << rs.ratio_stderr << rs.mean_duration << rs.mean_blocks << c.seed;
  csv.end_row();
  out << "v_regen = " << format_double(rs.v) << " +- " << format_double(rs.stderr_) << " over " << rs.cycles
      << " cycles\n";
  return kOk;
}

int cmd_subballistic(const RunConfig& c, const Manifest& m, const std::string& dir, std::ostream& out) {
  const Kernel k(c.walk, c.env);
  std::vector<QuantileCoupling> qs(c.replicas);
  std::vector<SubballisticTrace> traces(c.replicas);
  parallel_for(c.replicas, resolve_threads(c.threads), [&](std::size_t r) {
    Environment env(c.env, environment_seed(c.seed, r), {-128, window_hi(k)});
    qs[r] = coupled_overshoot_check(env, k, c.blocks, c.seed, r);
    traces[r] = subballistic_bound(env, k, c.blocks, c.seed, r);
  });
  const DominanceTest dt = dominance_test(qs);
  JsonlWriter jl(path_in(dir, "subballistic.jsonl"), m);
  CsvWriter csv(path_in(dir, "subballistic.csv"), m,
                {"replica", "L", "gamma_geo", "blocks", "violations", "mean_duration", "mean_S", "final_bound",
                 "dominance_z", "dominance_pass"});
  std::size_t violations = 0;
  for (std::size_t r = 0; r < c.replicas; ++r) {
    const QuantileCoupling& q = qs[r];
    for (std::size_t b = 0; b < q.blocks.size(); ++b) {
      const CouplingBlock& bl = q.blocks[b];
      jl.write({{"replica", r},
                {"block", b},
                {"threshold", bl.threshold},
                {"start", bl.start},
                {"W", bl.W},
                {"xi", bl.xi},
                {"u", bl.u},
                {"s", bl.s},
                {"S", bl.S},
                {"duration", bl.duration}});
    }
    violations += q.violations;
    const double bound = traces[r].bound.empty() ? 0.0 : traces[r].bound.back();
    csv << r << q.L << q.gamma_geo << q.blocks.size() << q.violations << q.mean_duration << q.mean_S << bound
        << dt.z << dt.pass;
    csv.end_row();
  }
  out << "violations = " << violations << ", dominance z = " << format_double(dt.z)
      << (dt.pass ? " (pass)" : " (fail)") << "\n";
  return kOk;
}

int cmd_evm(const RunConfig& c, const Manifest& m, const std::string& dir, std::ostream& out) {
  const Kernel k(c.walk, c.env);
  Environment env(c.env, environment_seed(c.seed, 0), {-128, window_hi(k)});
  const DensityDiagnostics dd = density_ratio_profile(env, k, c.steps, c.seed, c.replicas, c.threads, true);
  JsonlWriter jl(path_in(dir, "evm.jsonl"), m);
  jl.write({{"n", dd.n},
            {"replicas", dd.replicas},
            {"v_hat", dd.v_hat},
            {"v_stderr", dd.v_stderr},
            {"m", dd.m},
            {"epsilon", dd.epsilon},
            {"gamma_hat", dd.gamma_hat},
            {"below_m_fraction", dd.below_m_fraction},
            {"threshold_reached", dd.threshold_reached},
            {"violations", dd.violations},
            {"min_ratio", dd.min_ratio},
            {"max_ratio_over_F", dd.max_ratio_over_F}});
  CsvWriter csv(path_in(dir, "evm.csv"), m, {"k", "ratio", "structural_F", "gamma_hat", "min_visits"});
  for (std::size_t i = 0; i < dd.ratio.size(); ++i) {
    csv << static_cast<std::int64_t>(i + 1) << dd.ratio[i] << dd.structural[i] << dd.gamma_hat << dd.min_visits[i];
    csv.end_row();
  }
  out << "m(n) = " << dd.m << ", violations = " << dd.violations << ", min ratio = " << format_double(dd.min_ratio)
      << ", gamma_hat = " << format_double(dd.gamma_hat) << "\n";
  return kOk;
}

int cmd_verify(const Flags& f, const std::optional<std::string>& out_dir, std::ostream& out) {
  acceptance::Options opts;
  opts.suite = acceptance::parse_suite(f.suite);
  if (f.seed) opts.seed = *f.seed;
  if (f.threads) opts.threads = *f.threads;
  out << "mottrw verify --suite " << acceptance::to_string(opts.suite) << " (seed " << opts.seed << ")\n";
  const auto results = acceptance::run(opts, f.only, &out);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  out << results.size() - failed << "/" << results.size() << " criteria passed\n";
  if (out_dir) {
    Manifest m;
    m.command = "verify";
    m.seed = opts.seed;
    m.config = {{"suite", acceptance::to_string(opts.suite)}, {"only", f.only}};
    prepare_output(*out_dir, m);
    CsvWriter csv(path_in(*out_dir, "verify.csv"), m, {"id", "name", "pass", "seconds", "budget_seconds", "detail"});
    for (const auto& r : results) {
      csv << r.id << r.name << r.pass << r.seconds << r.budget_seconds << r.detail;
      csv.end_row();
    }
  }
  return failed == 0 ? kOk : kVerificationFailure;
}

using Command = int (*)(const RunConfig&, const Manifest&, const std::string&, std::ostream&);

RunConfig defaults_for(const std::string& command) {
  RunConfig c;
  if (command == "sweep") c.env = EnvironmentSpec::heavy_tail(1.5);
  if (command == "regen") c.walk.rho = 3;
  if (command == "subballistic") {
    c.env = EnvironmentSpec::heavy_tail(1.5);
    c.walk.lambda = 0.25;
    c.replicas = 4;
  }
  if (command == "evm") {
    c.walk.rho = 3;
    c.replicas = 64;
  }
  if (command == "sweep") c.replicas = 8;
  return c;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--manifest", f.manifest, "rerun exactly from a manifest.json")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--replicas", f.replicas, "replicas / environments / runs");
  sub->add_option("--steps", f.steps, "steps per replica (n for evm)");
  sub->add_option("--burn-in", f.burn_in, "steps discarded before velocity estimates");
  sub->add_option("--lambda,--lambda-grid", f.lambda, "bias, or A:B:STEP for sweep");
  sub->add_option("--rho", f.rho, "truncation level: positive integer or inf");
  sub->add_option("--family", f.family, "constant_lattice | renewal_iid | markov_velocino | heavy_tail_sorpresa");
  sub->add_option("--gamma", f.gamma, "gamma_tail (heavy tail) or gamma_mc (markov)");
  sub->add_option("--mu", f.mu, "rate of Z - d for renewal exponential");
  sub->add_option("--d", f.d, "lattice spacing or renewal floor");
  sub->add_option("--horizons", f.horizons, "comma-separated horizons");
  sub->add_option("--cycles", f.cycles, "regeneration cycles per run");
  sub->add_option("--blocks", f.blocks, "coupled blocks per replica");
  sub->add_option("--threads", f.threads, "worker threads (default MOTTRW_THREADS or hardware)");
  sub->get_option("--manifest")->excludes(sub->get_option("--config"));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mottrw: biased Mott random walks in random environments"};
  app.require_subcommand(1);
  Flags f;
  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"simulate", {"quenched walk trajectories and the velocity estimate", cmd_simulate}},
      {"sweep", {"phase sweep over a lambda grid", cmd_sweep}},
      {"conductance", {"effective conductances between two site sets", cmd_conductance}},
      {"regen", {"zeta-coupled regeneration cycles and the speed formula", cmd_regen}},
      {"subballistic", {"quantile coupling of overshoots and the upper-bound chain", cmd_subballistic}},
      {"evm", {"visit-density ratios of the environment seen from the walker", cmd_evm}},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, info] : commands) {
    CLI::App* sub = app.add_subcommand(name, info.first);
    add_common(sub, f);
    subs[name] = sub;
  }
  CLI::App* verify = app.add_subcommand("verify", "acceptance suite, one pass/fail line per criterion");
  verify->add_option("--suite", f.suite, "fast | full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
  verify->add_option("--seed", f.seed, "master seed");
  verify->add_option("--threads", f.threads, "worker threads");
  verify->add_option("--only", f.only, "criterion ids to run");
  std::optional<std::string> verify_out;
  verify->add_option("--out", verify_out, "write verify.csv into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidationError;
  }

  try {
    if (verify->parsed()) return cmd_verify(f, verify_out, out);
    for (const auto& [name, info] : commands) {
      if (!subs[name]->parsed()) continue;
      RunConfig cfg = defaults_for(name);
      Manifest m;
      m.command = name;
      if (!f.manifest.empty()) {
        const Manifest src = Manifest::load(f.manifest);
        if (src.command != name)
          throw ConfigError(f.manifest + ": manifest is for '" + src.command + "', not '" + name + "'");
        merge(cfg, src.config, {}, f.manifest);
        if (f.seed || f.replicas || f.steps || f.burn_in || f.lambda || f.rho || f.family || f.gamma || f.mu ||
            f.d || f.horizons || f.cycles || f.blocks)
          throw ConfigError("--manifest reruns exactly; only --out and --threads may be combined with it");
        if (f.threads) cfg.threads = *f.threads;
      } else {
        if (!f.config.empty()) merge_file(cfg, f.config);
        apply_flags(cfg, f, name);
      }
      validate(cfg, name);
      m.config = to_json(cfg);
      m.seed = cfg.seed;
      prepare_output(f.out, m);
      return info.second(cfg, m, f.out, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }
  return kValidationError;
}

}  // namespace mottrw::cli
