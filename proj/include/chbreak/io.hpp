#pragma once

// CSV and JSON persistence. Every double in CSV is printed with %.17g so
// files round-trip and stay byte-identical across runs; JSON numbers use the
// shortest round-trip form, non-finite values become null.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chbreak/breaking.hpp"
#include "chbreak/elliptic.hpp"
#include "chbreak/invariants.hpp"
#include "chbreak/spectral.hpp"
#include "chbreak/trajectory.hpp"

namespace chbreak::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
}

/// Rows of doubles under a header; one line per row.
inline void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
  auto out = open_for_write(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

inline void write_snapshot(const std::filesystem::path& path, const GridField& u) {
  std::vector<std::vector<double>> rows;
  rows.reserve(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) rows.push_back({u.grid().x(j), u[j]});
  write_table(path, {"x", "u"}, rows);
}

/// t, y, xi, invariants (weighted when lambda != 0), h1_norm, m_h1_norm.
inline void write_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                             const std::vector<MinSlopeSample>& slopes, double lambda) {
  std::vector<std::string> header{"t", "min_slope", "xi"};
  if (lambda == 0.0)
    header.insert(header.end(), {"H0", "H", "H1"});
  else
    header.insert(header.end(), {"H0w", "Hw"});
  header.insert(header.end(), {"h1_norm", "m_h1_norm"});
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < traj.records(); ++i) {
    const double t = traj.times[i];
    const auto& d = traj.diagnostics[i];
    std::vector<double> row{t, slopes[i].y, slopes[i].xi};
    if (lambda == 0.0) {
      row.insert(row.end(), {d.h0, d.energy, d.h1});
    } else {
      row.push_back(std::exp(lambda * t) * d.h0);
      row.push_back(std::exp(2.0 * lambda * t) * d.energy);
    }
    row.insert(row.end(), {d.h1_norm, d.m_h1_norm});
    rows.push_back(std::move(row));
  }
  write_table(path, header, rows);
}

inline Json to_json(const BreakingForecast& f) {
  Json j;
  j["a"] = number(f.a);
  j["x0"] = number(f.x0);
  j["s0"] = number(f.s0);
  j["y0"] = number(f.y0);
  j["psi"] = number(f.psi);
  j["eps0"] = number(f.eps0);
  j["lambda0"] = number(f.lambda0);
  j["threshold"] = number(f.threshold);
  j["condition_holds"] = f.condition_holds;
  j["lambda"] = number(f.lambda);
  j["t_plus"] = number(f.t_plus);
  j["t_plus_finite"] = std::isfinite(f.t_plus);
  return j;
}

inline Json to_json(const WaveParams& w) {
  Json j;
  j["form"] = w.form == WaveForm::snoidal ? "snoidal" : "dnoidal";
  j["alpha"] = number(w.offset);
  j["beta"] = number(w.amplitude);
  j["k"] = number(w.k);
  j["L"] = number(w.period);
  j["c"] = number(w.speed);
  j["A"] = number(w.first_integral);
  j["mean"] = number(wave_mean(w));
  j["degenerate"] = w.degenerate;
  j["fit_residual"] = number(w.fit_residual);
  return j;
}

inline Json to_json(const InvariantReport& r) {
  Json j;
  Json drift = Json::object();
  for (const auto& q : r.quantities) drift[std::string(to_string(q.id))] = number(q.max_relative_drift);
  j["max_drift"] = drift;
  if (r.lambda > 0.0) {
    j["energy_bound_holds"] = r.energy_bound_holds;
    j["h1_norm_bound_holds"] = r.h1_norm_bound_holds;
    j["weighted_equality_observed"] = r.weighted_equality_observed;
  }
  return j;
}

}  // namespace chbreak::io
