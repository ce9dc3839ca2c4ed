// chbreak: command-line driver.
//
//   chbreak simulate        --config PATH [--out DIR] [--seed INT] [--quiet]
//   chbreak forecast        --config PATH [--out DIR]
//   chbreak travelwave      --k K [--L L] [--mean M] [--n N] [--out DIR]
//   chbreak verify-currents [--lambda R] [--trials N] [--seed INT] [--out DIR]
//   chbreak convergence     --config PATH [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 verification failure,
// 4 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "chbreak/chbreak.hpp"

namespace fs = std::filesystem;
using namespace chbreak;
using io::Json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kVerificationFailure = 3;
constexpr int kNumericalFailure = 4;

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct VerificationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void say(const Common& o, const std::string& line) {
  if (!o.quiet) std::cout << line << '\n';
}

RunConfig load(const Common& o) {
  if (o.config.empty()) throw ConfigError("--config PATH is required for this subcommand");
  return load_config(o.config);
}

fs::path out_dir(const Common& o, const RunConfig* cfg, const std::string& fallback) {
  if (!o.out.empty()) return o.out;
  if (cfg) return cfg->out_dir;
  return fallback;
}

unsigned thread_cap() {
  const char* env = std::getenv("CHBREAK_THREADS");
  if (!env || !*env) return std::max(1u, std::thread::hardware_concurrency());
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("CHBREAK_THREADS must be a positive integer");
  return static_cast<unsigned>(v);
}

GridField initial_or_config_error(const RunConfig& cfg, std::optional<PeriodicGrid> grid = {}) {
  try {
    return initial_field(cfg, grid);
  } catch (const NoWaveError& e) {
    throw ConfigError(std::string("initial_data: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("initial_data: ") + e.what());
  }
}

std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u_%06zu.csv", i);
  return buf;
}

int cmd_simulate(const Common& o) {
  const RunConfig cfg = load(o);
  const fs::path dir = out_dir(o, &cfg, cfg.out_dir);
  const GridField u0 = initial_or_config_error(cfg);
  const Trajectory tr = integrate(u0, cfg.equation(), cfg.control);
  const auto slopes = track_min_slope(tr, cfg.refine_slopes);
  const InvariantReport rep = audit(tr, cfg.lambda);

  if (cfg.wants("csv")) {
    io::write_trajectory(dir / "trajectory.csv", tr, slopes, cfg.lambda);
    for (std::size_t i = 0; i < tr.records(); ++i)
      io::write_snapshot(dir / "snapshots" / snapshot_name(i), tr.snapshots[i]);
  }

  Json s;
  s["termination"] = std::string(to_string(tr.termination));
  s["final_t"] = io::number(tr.final_time());
  s["steps"] = tr.steps;
  s["records"] = tr.records();
  s["L"] = cfg.L;
  s["n"] = cfg.n;
  s["lambda"] = cfg.lambda;
  s["seed"] = o.seed;
  const Json audit_json = io::to_json(rep);
  for (const auto& [k, v] : audit_json.items()) s[k] = v;
  s["min_slope_final"] = io::number(slopes.back().y);
  s["warnings"] = tr.warnings;
  try {
    const BreakingForecast f = forecast(u0, cfg.lambda);
    Json fj = io::to_json(f);
    if (tr.termination == Termination::breaking_detected)
      fj["detected_before_t_plus"] = tr.final_time() < f.t_plus;
    s["forecast"] = fj;
  } catch (const DegenerateDataError&) {
    s["forecast"] = nullptr;
  }
  if (cfg.wants("json")) io::write_json(dir / "summary.json", s);

  say(o, "termination " + s["termination"].get<std::string>() + " at t = " + io::format_double(tr.final_time()));
  return tr.termination == Termination::nonfinite ? kNumericalFailure : kOk;
}

int cmd_forecast(const Common& o) {
  const RunConfig cfg = load(o);
  const fs::path dir = out_dir(o, &cfg, cfg.out_dir);
  const GridField u0 = initial_or_config_error(cfg);
  Json j;
  try {
    j = io::to_json(forecast(u0, cfg.lambda));
  } catch (const DegenerateDataError& e) {
    j["condition_holds"] = false;
    j["lambda"] = cfg.lambda;
    j["t_plus"] = nullptr;
    j["t_plus_finite"] = false;
    j["reason"] = e.what();
  }
  io::write_json(dir / "forecast.json", j);
  say(o, std::string("condition_holds ") + (j["condition_holds"].get<bool>() ? "true" : "false"));
  return kOk;
}

struct WaveArgs {
  double L = 2.0 * std::numbers::pi;
  double k = 0.5;
  std::optional<double> mean;
  std::size_t n = 512;
};

int cmd_travelwave(const Common& o, const WaveArgs& a) {
  const fs::path dir = out_dir(o, nullptr, "out");
  std::optional<PeriodicGrid> grid;
  try {
    grid.emplace(a.L, a.n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  WaveParams w;
  try {
    w = fit_traveling_wave(a.L, a.k, a.mean);
  } catch (const NoWaveError& e) {
    Json j;
    j["feasible"] = false;
    j["message"] = e.what();
    j["attainable_means"] = e.attainable_means;
    io::write_json(dir / "wave.json", j);
    throw VerificationFailure(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  const GridField phi = snoidal_profile(w, *grid);
  const GridField series = first_integral_series(phi, w.speed);
  double scale = 1.0, lo = series[0], hi = series[0];
  for (std::size_t j = 0; j < phi.size(); ++j) {
    scale = std::max({scale, std::abs(w.speed * phi[j]), std::pow(std::abs(phi[j]), 3)});
    lo = std::min(lo, series[j]);
    hi = std::max(hi, series[j]);
  }
  const double spread = (hi - lo) / scale;
  constexpr double tolerance = 1e-8;

  Json j;
  j["feasible"] = true;
  j["wave"] = io::to_json(w);
  j["dnoidal"] = io::to_json(to_dnoidal(w));
  j["constancy"] = {{"n", a.n}, {"relative_spread", spread}, {"tolerance", tolerance},
                    {"pass", spread <= tolerance}};
  io::write_json(dir / "wave.json", j);
  io::write_snapshot(dir / "profile.csv", phi);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < phi.size(); ++i) rows.push_back({grid->x(i), series[i]});
  io::write_table(dir / "first_integral.csv", {"x", "E"}, rows);

  say(o, "c = " + io::format_double(w.speed) + ", constancy " + io::format_double(spread));
  if (spread > tolerance) throw VerificationFailure("first-integral spread above tolerance");
  return kOk;
}

struct CurrentArgs {
  std::string lambda = "0";
  int trials = 1000;
};

int cmd_verify_currents(const Common& o, const CurrentArgs& a) {
  const fs::path dir = out_dir(o, nullptr, "out");
  jet::Rational lambda;
  try {
    lambda = jet::parse_rational(a.lambda);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("--lambda: ") + e.what());
  }
  if (a.trials < 1) throw ConfigError("--trials must be positive");
  constexpr double tolerance = 1e-12;
  const jet::DiffExpr F = jet::equation_expression(lambda);
  std::mt19937_64 rng(o.seed);
  bool ok = true;
  Json list = Json::array();
  for (const auto& c : jet::builtin_currents(lambda)) {
    const jet::DiffExpr rest = jet::symbolic_cancellation(c.density, c.flux, c.characteristic, F, lambda);
    double worst = 0.0;
    for (int i = 0; i < a.trials; ++i) {
      const auto p = jet::random_jet(rng, 6);
      const double r = jet::divergence_residual(c.density, c.flux, c.characteristic, F, p, lambda);
      const double s = jet::divergence_scale(c.density, c.flux, c.characteristic, F, p, lambda);
      worst = std::max(worst, s > 0.0 ? std::abs(r) / s : std::abs(r));
    }
    const bool pass = rest.is_zero() && worst <= tolerance;
    ok = ok && pass;
    list.push_back({{"name", c.name},
                    {"density", jet::to_string(c.density)},
                    {"flux", jet::to_string(c.flux)},
                    {"characteristic", jet::to_string(c.characteristic)},
                    {"symbolic_remainder", jet::to_string(rest)},
                    {"max_relative_residual", worst},
                    {"pass", pass}});
    say(o, c.name + (pass ? " ok" : " FAILED") + " (max relative residual " + io::format_double(worst) + ")");
  }
  Json j;
  j["lambda"] = jet::to_string(lambda);
  j["trials"] = a.trials;
  j["seed"] = o.seed;
  j["tolerance"] = tolerance;
  j["currents"] = list;
  j["pass"] = ok;
  io::write_json(dir / "currents.json", j);
  if (!ok) throw VerificationFailure("current identity residual above tolerance");
  return kOk;
}

Json study_json(const RefinementStudy& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"n", r.n}, {"h", r.h}, {"error", io::number(r.error)}, {"order", io::number(r.order)}});
  return {{"kind", s.kind}, {"rows", rows}, {"min_order", io::number(s.min_order())}};
}

int cmd_convergence(const Common& o) {
  const RunConfig cfg = load(o);
  const fs::path dir = out_dir(o, &cfg, cfg.out_dir);
  const auto& v = cfg.convergence;
  const unsigned threads = thread_cap();
  const GridField u0 = initial_or_config_error(cfg);
  const double ref_dt = v.reference_dt > 0.0 ? v.reference_dt
                                            : *std::min_element(v.dts.begin(), v.dts.end()) / 8.0;
  const auto temporal = temporal_study(u0, cfg.equation(), v.dts, ref_dt, v.t_end, threads);
  const auto spatial = spatial_study([&](const PeriodicGrid& g) { return initial_or_config_error(cfg, g); }, cfg.L,
                                     cfg.equation(), v.ns, v.reference_n, ref_dt, v.t_end, threads);

  std::vector<std::vector<double>> rows;
  for (const auto* s : {&temporal, &spatial})
    for (std::size_t i = 0; i < s->rows.size(); ++i) {
      const auto& r = s->rows[i];
      rows.push_back({s == &temporal ? 0.0 : 1.0, static_cast<double>(r.n), r.h, r.error, r.order});
      const fs::path member = dir / s->kind / ("member_" + std::to_string(i)) / "final.csv";
      if (cfg.wants("csv")) io::write_snapshot(member, GridField(PeriodicGrid(cfg.L, r.n), r.final_field));
    }
  if (cfg.wants("csv")) io::write_table(dir / "order_table.csv", {"study", "n", "h", "error", "order"}, rows);
  if (cfg.wants("json"))
    io::write_json(dir / "convergence.json", {{"t_end", v.t_end},
                                              {"reference_dt", ref_dt},
                                              {"temporal", study_json(temporal)},
                                              {"spatial", study_json(spatial)}});
  say(o, "temporal min order " + io::format_double(temporal.min_order()));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver and verification toolkit for a weakly dissipative Camassa-Holm-type equation"};
  app.require_subcommand(1);
  Common o;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", o.config, "INI run configuration");
    if (needs_config) opt->required();
    sub->add_option("--out", o.out, "output directory (overrides outputs.directory)");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_flag("--quiet", o.quiet, "suppress progress output");
  };
  auto* simulate = app.add_subcommand("simulate", "integrate and write trajectory, snapshots and summary");
  add_common(simulate, true);
  auto* fc = app.add_subcommand("forecast", "evaluate the wave-breaking criterion for the initial data");
  add_common(fc, true);
  auto* tw = app.add_subcommand("travelwave", "fit an elliptic traveling wave");
  add_common(tw, false);
  WaveArgs wave;
  double mean = 0.0;
  tw->add_option("--L", wave.L, "period");
  tw->add_option("--k", wave.k, "elliptic modulus in [0, 1)")->required();
  auto* mean_opt = tw->add_option("--mean", mean, "required mean level");
  tw->add_option("--n", wave.n, "profile grid size");
  auto* vc = app.add_subcommand("verify-currents", "check the conserved currents off-shell");
  add_common(vc, false);
  CurrentArgs cur;
  vc->add_option("--lambda", cur.lambda, "dissipation as an exact rational, e.g. 7/3");
  vc->add_option("--trials", cur.trials, "random jet points per current");
  auto* conv = app.add_subcommand("convergence", "temporal and spatial refinement study");
  add_common(conv, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  if (*mean_opt) wave.mean = mean;

  try {
    if (*simulate) return cmd_simulate(o);
    if (*fc) return cmd_forecast(o);
    if (*tw) return cmd_travelwave(o, wave);
    if (*vc) return cmd_verify_currents(o, cur);
    if (*conv) return cmd_convergence(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kVerificationFailure;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
