#pragma once

// Run configuration: an INI file with sections
//
//   [grid]          L, n
//   [equation]      lambda
//   [initial_data]  kind = zero|constant|gaussian|gaussian_slope_seed|snoidal|from_file
//                   value (constant), amplitude, width, center (gaussian kinds),
//                   modulus, mean (snoidal), path (from_file)
//   [control]       cfl, dt_max, dt_min, t_end, record_every, dealias,
//                   slope_ceiling, fixed_dt, refine_slopes
//   [outputs]       directory, formats (space or comma separated: csv json)
//   [convergence]   dts, ns, reference_n, reference_dt, t_end
//
// Every key is optional; unknown sections and keys are rejected. The
// gaussian kinds both mean A exp(-((x - center)/width)^2); the seed kind only
// switches the defaults to A = 1, w = 0.1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "chbreak/elliptic.hpp"
#include "chbreak/error.hpp"
#include "chbreak/spectral.hpp"
#include "chbreak/timestepper.hpp"

namespace chbreak {

struct InitialData {
  std::string kind = "gaussian";
  double value = 0.0;
  double amplitude = 1.0;
  double width = 1.0;
  double center = 0.0;
  double modulus = 0.5;
  std::optional<double> mean;
  std::string path;
};

struct ConvergenceConfig {
  std::vector<double> dts{0.04, 0.02, 0.01, 0.005};
  std::vector<std::size_t> ns{64, 128, 256, 512};
  double reference_dt = 0.0;     // 0: dts.back() / 8
  std::size_t reference_n = 0;   // 0: 2 * ns.back()
  double t_end = 0.5;
};

struct RunConfig {
  double L = 40.0;
  std::size_t n = 512;
  double lambda = 0.0;
  InitialData initial;
  StepControl control;
  bool dealias = true;
  bool refine_slopes = false;
  std::string out_dir = "out";
  std::vector<std::string> formats{"csv", "json"};
  ConvergenceConfig convergence;

  PeriodicGrid grid() const { return PeriodicGrid(L, n); }
  EquationParams equation() const { return {lambda, dealias}; }
  bool wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline double to_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not a finite number: '" + text + "'");
  }
}

inline std::size_t to_count(const std::string& key, const std::string& text) {
  const double v = to_number(key, text);
  if (v < 1 || v != std::floor(v) || v > 1e9) throw ConfigError("config: " + key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

inline bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config: " + key + " must be a boolean: '" + text + "'");
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  auto bad = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (!(c.L > 0.0)) bad("grid.L must be positive");
  auto pow2 = [](std::size_t m) { return m >= 16 && (m & (m - 1)) == 0; };
  if (!pow2(c.n)) bad("grid.n must be a power of two >= 16");
  static const std::set<std::string> kinds{"zero", "constant", "gaussian", "gaussian_slope_seed", "snoidal",
                                           "from_file"};
  if (!kinds.count(c.initial.kind)) bad("unknown initial_data.kind '" + c.initial.kind + "'");
  if ((c.initial.kind == "gaussian" || c.initial.kind == "gaussian_slope_seed") && !(c.initial.width > 0.0))
    bad("initial_data.width must be positive");
  if (c.initial.kind == "snoidal" && !(c.initial.modulus >= 0.0 && c.initial.modulus < 1.0))
    bad("initial_data.modulus must lie in [0, 1)");
  if (c.initial.kind == "from_file" && c.initial.path.empty()) bad("initial_data.path is required for from_file");
  try {
    c.control.validate();
  } catch (const std::invalid_argument& e) {
    bad(std::string("control: ") + e.what());
  }
  for (const auto& f : c.formats)
    if (f != "csv" && f != "json") bad("unknown output format '" + f + "'");
  if (c.out_dir.empty()) bad("outputs.directory must not be empty");
  const auto& v = c.convergence;
  if (v.dts.size() < 2 || v.ns.size() < 2) bad("convergence needs at least two dts and two ns");
  for (double dt : v.dts)
    if (!(dt > 0.0)) bad("convergence.dts must be positive");
  for (std::size_t m : v.ns)
    if (!pow2(m)) bad("convergence.ns must be powers of two >= 16");
  if (!(v.t_end > 0.0)) bad("convergence.t_end must be positive");
  if (v.reference_n != 0 && !pow2(v.reference_n)) bad("convergence.reference_n must be a power of two >= 16");
  for (std::size_t m : v.ns)
    if (v.reference_n != 0 && v.reference_n < m) bad("convergence.reference_n must be >= every n");
  if (!(v.reference_dt >= 0.0)) bad("convergence.reference_dt must be >= 0");
}

inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig c;
  bool seed_kind = false;
  std::optional<double> amplitude, width;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, std::map<std::string, Setter>> schema{
      {"grid",
       {{"L", [&](auto& k, auto& v) { c.L = detail::to_number(k, v); }},
        {"n", [&](auto& k, auto& v) { c.n = detail::to_count(k, v); }}}},
      {"equation", {{"lambda", [&](auto& k, auto& v) { c.lambda = detail::to_number(k, v); }}}},
      {"initial_data",
       {{"kind",
         [&](auto&, auto& v) {
           c.initial.kind = v;
           seed_kind = v == "gaussian_slope_seed";
         }},
        {"value", [&](auto& k, auto& v) { c.initial.value = detail::to_number(k, v); }},
        {"amplitude", [&](auto& k, auto& v) { amplitude = detail::to_number(k, v); }},
        {"width", [&](auto& k, auto& v) { width = detail::to_number(k, v); }},
        {"center", [&](auto& k, auto& v) { c.initial.center = detail::to_number(k, v); }},
        {"modulus", [&](auto& k, auto& v) { c.initial.modulus = detail::to_number(k, v); }},
        {"mean", [&](auto& k, auto& v) { c.initial.mean = detail::to_number(k, v); }},
        {"path", [&](auto&, auto& v) { c.initial.path = v; }}}},
      {"control",
       {{"cfl", [&](auto& k, auto& v) { c.control.cfl = detail::to_number(k, v); }},
        {"dt_max", [&](auto& k, auto& v) { c.control.dt_max = detail::to_number(k, v); }},
        {"dt_min", [&](auto& k, auto& v) { c.control.dt_min = detail::to_number(k, v); }},
        {"t_end", [&](auto& k, auto& v) { c.control.t_end = detail::to_number(k, v); }},
        {"record_every", [&](auto& k, auto& v) { c.control.record_every = detail::to_number(k, v); }},
        {"slope_ceiling", [&](auto& k, auto& v) { c.control.slope_ceiling = detail::to_number(k, v); }},
        {"fixed_dt", [&](auto& k, auto& v) { c.control.fixed_dt = detail::to_number(k, v); }},
        {"dealias", [&](auto& k, auto& v) { c.dealias = detail::to_bool(k, v); }},
        {"refine_slopes", [&](auto& k, auto& v) { c.refine_slopes = detail::to_bool(k, v); }}}},
      {"outputs",
       {{"directory", [&](auto&, auto& v) { c.out_dir = v; }},
        {"formats", [&](auto&, auto& v) { c.formats = detail::split_list(v); }}}},
      {"convergence",
       {{"dts",
         [&](auto& k, auto& v) {
           c.convergence.dts.clear();
           for (const auto& w : detail::split_list(v)) c.convergence.dts.push_back(detail::to_number(k, w));
         }},
        {"ns",
         [&](auto& k, auto& v) {
           c.convergence.ns.clear();
           for (const auto& w : detail::split_list(v)) c.convergence.ns.push_back(detail::to_count(k, w));
         }},
        {"reference_dt", [&](auto& k, auto& v) { c.convergence.reference_dt = detail::to_number(k, v); }},
        {"reference_n", [&](auto& k, auto& v) { c.convergence.reference_n = detail::to_count(k, v); }},
        {"t_end", [&](auto& k, auto& v) { c.convergence.t_end = detail::to_number(k, v); }}}},
  };

  for (const auto& [section, body] : tree) {
    auto s = schema.find(section);
    if (s == schema.end()) {
      if (body.empty() && !body.data().empty())
        throw ConfigError("config: key '" + section + "' outside any section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      auto setter = s->second.find(key);
      if (setter == s->second.end()) throw ConfigError("config: unknown key " + section + "." + key);
      setter->second(section + "." + key, node.data());
    }
  }
  c.initial.amplitude = amplitude.value_or(1.0);
  c.initial.width = width.value_or(seed_kind ? 0.1 : 1.0);
  validate(c);
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse_config(in);
}

/// Two-column x,u CSV (optional header) whose abscissae match the grid.
inline GridField read_profile_csv(const std::filesystem::path& path, const PeriodicGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open initial profile " + path.string());
  GridField u(grid);
  std::size_t j = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line == "x,u") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("initial profile: expected 'x,u' rows");
    const double x = detail::to_number("x", line.substr(0, comma));
    const double v = detail::to_number("u", line.substr(comma + 1));
    if (j >= grid.size()) throw ConfigError("initial profile: more rows than grid points");
    if (std::abs(x - grid.x(j)) > 1e-9 * (1.0 + std::abs(x)))
      throw ConfigError("initial profile: abscissae do not match the configured grid");
    u[j++] = v;
  }
  if (j != grid.size()) throw ConfigError("initial profile: fewer rows than grid points");
  return u;
}

/// Initial data sampled on `grid` (the configured one by default).
inline GridField initial_field(const RunConfig& c, std::optional<PeriodicGrid> grid = {}) {
  const PeriodicGrid g = grid.value_or(c.grid());
  const auto& d = c.initial;
  if (d.kind == "zero") return GridField(g);
  if (d.kind == "constant") return sample(g, [&](double) { return d.value; });
  if (d.kind == "gaussian" || d.kind == "gaussian_slope_seed")
    return sample(g, [&](double x) {
      const double s = (x - d.center) / d.width;
      return d.amplitude * std::exp(-s * s);
    });
  if (d.kind == "snoidal") {
    const WaveParams w = fit_traveling_wave(c.L, d.modulus, d.mean);
    return snoidal_profile(w, g);
  }
  return read_profile_csv(d.path, g);
}

}  // namespace chbreak
