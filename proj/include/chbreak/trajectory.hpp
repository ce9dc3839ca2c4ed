#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "chbreak/spectral.hpp"

namespace chbreak {

enum class Termination { completed, breaking_detected, nonfinite };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::breaking_detected: return "breaking_detected";
    case Termination::nonfinite: return "nonfinite";
  }
  return "unknown";
}

/// Per-record diagnostics. Invariants are stored unweighted; the weighted
/// variants are derived from them and t.
struct Diagnostics {
  double min_slope = 0.0;       // y(t) = min_x u_x
  double min_slope_x = 0.0;     // xi(t)
  double u_at_min_slope = 0.0;  // u(t, xi(t))
  double h0 = 0.0;
  double energy = 0.0;
  double h1 = 0.0;
  double h1_norm = 0.0;    // ||u||_{H^1}
  double m_h1_norm = 0.0;  // ||u - u_xx||_{H^1}
};

struct Trajectory {
  std::vector<double> times;
  std::vector<GridField> snapshots;
  std::vector<Diagnostics> diagnostics;
  Termination termination = Termination::completed;
  std::size_t steps = 0;
  double last_dt = 0.0;
  std::vector<std::string> warnings;

  bool empty() const { return times.empty(); }
  std::size_t records() const { return times.size(); }
  double final_time() const { return times.empty() ? 0.0 : times.back(); }
};

}  // namespace chbreak
