// SPDX-License-Identifier: Apache-2.0
//
// Elastic layout allocation: aggregates completed-query statistics over a
// historical window, predicts query time / re-organization time / revenue /
// cost / profit for a candidate layout, and searches for the layout that
// maximizes predicted profit in the next window.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elastree/model.hpp"

namespace elastree {

// Historical aggregates over a trailing window of length w_h.
struct WindowStats {
  std::vector<double> q_h;      // completed queries per SLA class
  double num_q = 0.0;           // sum of q_h
  std::vector<Seconds> cpu_h;   // summed CPU seconds per layout level
  std::vector<Bytes> net_h;     // bytes entering level i from the level below
                                // (net_h[0] is always 0: storage-side inbound
                                // traffic is not part of the prediction)
  double conc = 0.0;            // average concurrently running queries
  ContainerLayout l_h;          // layout in force during the window
  Seconds w_h = 600.0;

  int height() const { return static_cast<int>(cpu_h.size()); }
};

struct ForecastConfig {
  Seconds w_p = 300.0;          // prediction window
  CloudPricing pricing;
  int arc = 4;
  Bytes data_size = 0.0;        // total stored volume at the data level
  std::vector<SlaSpec> slas;    // indexed like WindowStats::q_h
  LayoutBounds bounds;
  long enum_cap = 1'000'000;    // max layouts enumerate_optimal may visit
  int max_opt_iters = 500;
  double grad_tol = 1e-6;
  double fd_step = 1e-3;        // central-difference step, in containers
};

struct LayoutDecision {
  ContainerLayout layout;
  Money predicted_profit = 0.0;
  Seconds predicted_t_p = 0.0;
  Seconds reorg_time = 0.0;
  bool converged = true;
  std::string note;
};

// Everything predict_profit computes, for reporting and identity checks.
struct ProfitBreakdown {
  Seconds t_p = 0.0;
  Seconds t_p_d = 0.0;
  Money revenue_reorg = 0.0;   // sum over classes of R_P^d
  Money revenue_steady = 0.0;  // sum over classes of R_P
  Money cost = 0.0;            // O
  Money profit = 0.0;          // (revenue_reorg + revenue_steady) - cost
};

// A completed query as the stats collector sees it.
struct CompletedQuery {
  int class_index = 0;
  Seconds arrival = 0.0;
  Seconds finish = 0.0;
};

// Aggregates the window's completed queries. CPU and network bytes are
// attributed to layout levels through the plans' level ranks; conc is the
// summed execution time divided by w_h. An empty window yields all-zero
// stats (a valid idle signal).
WindowStats collect_stats(std::span<const CompletedQuery> completed,
                          std::span<const QueryClass> classes,
                          const ContainerLayout& layout, Seconds w_h);

// Average query time predicted for a candidate layout:
//   t_P = (conc / numQ_H) * [ CPU[0]/l[0]
//        + sum_{i>=1} ( CPU[i]/l[i] + NET[i] / (net_speed * min(l[i-1], l[i])) ) ]
// Idle stats (num_q = 0) predict 0. Real-valued candidates are allowed so the
// optimizer can relax the integer problem.
Seconds predict_query_time(const WindowStats& stats,
                           std::span<const double> candidate,
                           const CloudPricing& pricing);
Seconds predict_query_time(const WindowStats& stats, const ContainerLayout& candidate,
                           const CloudPricing& pricing);

// Data re-organization time when the data level changes from l_h[0] to
// l_p[0]: size_d / (|delta| * Arc * net_speed), clamped to [0, w_p].
Seconds reorg_time(const ContainerLayout& l_h, const ContainerLayout& l_p,
                   const ForecastConfig& cfg);
Seconds reorg_time(double from_data_level, double to_data_level,
                   const ForecastConfig& cfg);

Money predict_profit(const WindowStats& stats, std::span<const double> candidate,
                     const ForecastConfig& cfg);
Money predict_profit(const WindowStats& stats, const ContainerLayout& candidate,
                     const ForecastConfig& cfg);
ProfitBreakdown predict_profit_breakdown(const WindowStats& stats,
                                         std::span<const double> candidate,
                                         const ForecastConfig& cfg);

// Bounded local maximizer over the relaxed layout, seeded at stats.l_h,
// then ceiling-rounded and clamped to the bounds. Never returns a layout
// that predicts worse than staying at the seed.
LayoutDecision optimize_layout(const WindowStats& stats, const ForecastConfig& cfg);

// Exact argmax over the integer box (ties: lexicographically smallest).
// Throws EnumCapError when the box exceeds cfg.enum_cap layouts.
LayoutDecision enumerate_optimal(const WindowStats& stats, const ForecastConfig& cfg);

}  // namespace elastree
