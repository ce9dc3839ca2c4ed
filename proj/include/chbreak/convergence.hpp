#pragma once

// Temporal and spatial refinement studies against a finer reference run.
//
// Temporal: fixed-step RK4 at each dt on one grid; error = max |u_dt - u_ref|
// at t_end with u_ref from reference_dt. Spatial: each n with a common small
// fixed dt; error = max |u_n - u_ref| at the coarse nodes, which are a subset
// of the reference nodes when reference_n is a multiple of n. Observed order
// between neighbours: log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
//
// Member runs are independent and may execute concurrently; results are
// written to fixed slots, so the outcome does not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "chbreak/equation.hpp"
#include "chbreak/error.hpp"
#include "chbreak/spectral.hpp"
#include "chbreak/timestepper.hpp"

namespace chbreak {

struct RefinementRow {
  double h = 0.0;  // dt or dx
  std::size_t n = 0;
  double error = 0.0;
  double order = std::numeric_limits<double>::quiet_NaN();  // vs previous row
  std::vector<double> final_field;
};

struct RefinementStudy {
  std::string kind;  // "temporal" or "spatial"
  std::vector<RefinementRow> rows;
  std::vector<double> reference;

  /// Smallest observed order over neighbouring pairs.
  double min_order() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i) m = std::min(m, rows[i].order);
    return m;
  }
};

/// Runs tasks[i]() for all i on at most `threads` workers.
inline void run_parallel(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline std::vector<double> fixed_step_run(const GridField& u0, const EquationParams& p, double dt, double t_end) {
  StepControl ctl;
  ctl.fixed_dt = dt;
  ctl.t_end = t_end;
  ctl.record_every = t_end;
  ctl.dt_max = std::max(dt, 1.0);
  ctl.dt_min = ctl.dt_max * 1e-12;
  const Trajectory tr = integrate(u0, p, ctl);
  if (tr.termination != Termination::completed) throw NumericalError("refinement member did not complete");
  const auto v = tr.snapshots.back().values();
  return {v.begin(), v.end()};
}

inline void fill_orders(std::vector<RefinementRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].order = std::log(rows[i - 1].error / rows[i].error) / std::log(rows[i - 1].h / rows[i].h);
}

}  // namespace detail

inline RefinementStudy temporal_study(const GridField& u0, const EquationParams& p, std::vector<double> dts,
                                      double reference_dt, double t_end, unsigned threads = 1) {
  if (dts.size() < 2) throw std::invalid_argument("temporal study needs at least two step sizes");
  std::sort(dts.begin(), dts.end(), std::greater<>());
  if (reference_dt <= 0.0) reference_dt = dts.back() / 8.0;
  RefinementStudy s;
  s.kind = "temporal";
  s.rows.resize(dts.size());
  // slot 0..m-1: members, slot m: reference
  run_parallel(dts.size() + 1, threads, [&](std::size_t i) {
    if (i == dts.size()) {
      s.reference = detail::fixed_step_run(u0, p, reference_dt, t_end);
      return;
    }
    s.rows[i].h = dts[i];
    s.rows[i].n = u0.size();
    s.rows[i].final_field = detail::fixed_step_run(u0, p, dts[i], t_end);
  });
  for (auto& r : s.rows) {
    double e = 0.0;
    for (std::size_t j = 0; j < u0.size(); ++j) e = std::max(e, std::abs(r.final_field[j] - s.reference[j]));
    r.error = e;
  }
  detail::fill_orders(s.rows);
  return s;
}

/// `initial(grid)` samples the initial data on each member grid.
inline RefinementStudy spatial_study(const std::function<GridField(const PeriodicGrid&)>& initial, double L,
                                     const EquationParams& p, std::vector<std::size_t> ns,
                                     std::size_t reference_n, double dt, double t_end, unsigned threads = 1) {
  if (ns.size() < 2) throw std::invalid_argument("spatial study needs at least two grid sizes");
  std::sort(ns.begin(), ns.end());
  if (reference_n == 0) reference_n = 2 * ns.back();
  for (std::size_t n : ns)
    if (reference_n % n != 0) throw std::invalid_argument("reference_n must be a multiple of every n");
  RefinementStudy s;
  s.kind = "spatial";
  s.rows.resize(ns.size());
  run_parallel(ns.size() + 1, threads, [&](std::size_t i) {
    if (i == ns.size()) {
      const PeriodicGrid g(L, reference_n);
      s.reference = detail::fixed_step_run(initial(g), p, dt, t_end);
      return;
    }
    const PeriodicGrid g(L, ns[i]);
    s.rows[i].h = g.dx();
    s.rows[i].n = ns[i];
    s.rows[i].final_field = detail::fixed_step_run(initial(g), p, dt, t_end);
  });
  for (auto& r : s.rows) {
    const std::size_t stride = reference_n / r.n;
    double e = 0.0;
    for (std::size_t j = 0; j < r.n; ++j) e = std::max(e, std::abs(r.final_field[j] - s.reference[j * stride]));
    r.error = e;
  }
  detail::fill_orders(s.rows);
  return s;
}

}  // namespace chbreak
