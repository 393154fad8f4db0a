// SPDX-License-Identifier: Apache-2.0

#include "elastree/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "elastree/placement.hpp"
#include "elastree/scheduler.hpp"

namespace elastree {

namespace {

std::vector<double> as_real(const ContainerLayout& l) {
  return std::vector<double>(l.levels.begin(), l.levels.end());
}

void check_candidate(const WindowStats& stats, std::span<const double> candidate) {
  if (static_cast<int>(candidate.size()) != stats.height())
    throw std::invalid_argument("candidate layout height does not match stats");
  for (double v : candidate)
    if (!(v > 0.0)) throw std::domain_error("candidate layout needs positive counts");
}

struct AscentResult {
  std::vector<double> x;
  bool converged = true;
  int iterations = 0;
};

// Best point along one coordinate: a coarse scan over the whole range
// followed by golden-section refinement around the best cell. The scan makes
// the search robust to slices that dip before they rise (low counts can sit
// below the revenue hump).
double maximize_coordinate(const std::function<double(std::span<const double>)>& f,
                           std::vector<double>& x, size_t i, double lo, double hi) {
  if (hi - lo < 1e-12) {
    x[i] = lo;
    return f(x);
  }
  constexpr int kScanCells = 16;
  double best_t = x[i];
  x[i] = best_t;
  double best_f = f(x);
  for (int k = 0; k <= kScanCells; ++k) {
    const double t = lo + (hi - lo) * k / kScanCells;
    x[i] = t;
    const double ft = f(x);
    if (ft > best_f) {
      best_f = ft;
      best_t = t;
    }
  }
  const double cell = (hi - lo) / kScanCells;
  double a = std::max(lo, best_t - cell);
  double b = std::min(hi, best_t + cell);
  constexpr double kPhi = 0.6180339887498949;
  double c = b - kPhi * (b - a);
  double d = a + kPhi * (b - a);
  x[i] = c;
  double fc = f(x);
  x[i] = d;
  double fd = f(x);
  while (b - a > 1e-7) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kPhi * (b - a);
      x[i] = c;
      fc = f(x);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kPhi * (b - a);
      x[i] = d;
      fd = f(x);
    }
  }
  const double mid = 0.5 * (a + b);
  x[i] = mid;
  const double fm = f(x);
  if (fm >= best_f) return fm;
  x[i] = best_t;
  return f(x);
}

// Bounded local maximizer: cyclic coordinate ascent, one iteration being a
// full sweep over the coordinates. Convergence is declared when the
// central-difference projected gradient drops below grad_tol or a sweep
// stops improving (the min() kinks keep the finite-difference gradient away
// from zero at some constrained optima).
AscentResult maximize_in_box(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x, const std::vector<double>& lo,
                             const std::vector<double>& hi, int max_iters,
                             double grad_tol, double fd_step) {
  const size_t n = x.size();
  for (size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  double fx = f(x);

  AscentResult result;
  for (int iter = 0; iter < max_iters; ++iter) {
    result.iterations = iter + 1;

    std::vector<double> grad(n);
    std::vector<double> probe = x;
    for (size_t i = 0; i < n; ++i) {
      const double xi = x[i];
      probe[i] = xi + fd_step;
      const double f_plus = f(probe);
      probe[i] = xi - fd_step;
      const double f_minus = f(probe);
      probe[i] = xi;
      grad[i] = (f_plus - f_minus) / (2.0 * fd_step);
    }
    double proj_step = 0.0;
    for (size_t i = 0; i < n; ++i)
      proj_step = std::max(proj_step, std::abs(std::clamp(x[i] + grad[i], lo[i], hi[i]) - x[i]));
    if (proj_step <= grad_tol) {
      result.x = x;
      result.converged = true;
      return result;
    }

    const double before = fx;
    for (size_t i = 0; i < n; ++i) fx = maximize_coordinate(f, x, i, lo[i], hi[i]);
    // Stagnant sweeps count as converged: kinks from the min() terms keep
    // both the finite-difference gradient and microscopic seesaw gains alive
    // forever at some constrained optima.
    if (fx <= before + 1e-7 * (1.0 + std::abs(before))) {
      result.x = x;
      result.converged = true;
      return result;
    }
  }
  result.x = x;
  result.converged = false;
  return result;
}

}  // namespace

WindowStats collect_stats(std::span<const CompletedQuery> completed,
                          std::span<const QueryClass> classes,
                          const ContainerLayout& layout, Seconds w_h) {
  if (!(w_h > 0.0)) throw ConfigError("collect_stats: window length must be > 0");
  layout.validate();

  WindowStats stats;
  stats.l_h = layout;
  stats.w_h = w_h;
  const int height = layout.height();
  stats.q_h.assign(classes.size(), 0.0);
  stats.cpu_h.assign(static_cast<size_t>(height), 0.0);
  stats.net_h.assign(static_cast<size_t>(height), 0.0);

  double exec_sum = 0.0;
  for (const CompletedQuery& q : completed) {
    if (q.class_index < 0 || q.class_index >= static_cast<int>(classes.size()))
      throw ConfigError("collect_stats: query references an unknown class");
    const TreePlanProfile& plan = classes[static_cast<size_t>(q.class_index)].plan;
    stats.q_h[static_cast<size_t>(q.class_index)] += 1.0;
    exec_sum += q.finish - q.arrival;
    for (int j = 0; j < plan.height(); ++j) {
      const int lvl = rank_level(j, plan.height(), height);
      stats.cpu_h[static_cast<size_t>(lvl)] += plan.level_cpu(j);
      if (j + 1 < plan.height()) {
        // Transfer is attributed to the receiving level's term.
        const int up = rank_level(j + 1, plan.height(), height);
        if (up > 0) stats.net_h[static_cast<size_t>(up)] += plan.level_out_bytes(j);
      }
    }
  }
  stats.conc = exec_sum / w_h;
  for (double q : stats.q_h) stats.num_q += q;
  return stats;
}

Seconds predict_query_time(const WindowStats& stats,
                           std::span<const double> candidate,
                           const CloudPricing& pricing) {
  if (stats.num_q <= 0.0) return 0.0;  // idle window
  check_candidate(stats, candidate);
  const int h = stats.height();
  double sum = stats.cpu_h[0] / candidate[0];
  for (int i = 1; i < h; ++i) {
    const size_t u = static_cast<size_t>(i);
    sum += stats.cpu_h[u] / candidate[u];
    if (stats.net_h[u] > 0.0)
      sum += stats.net_h[u] /
             (pricing.net_speed * std::min(candidate[u - 1], candidate[u]));
  }
  return (stats.conc / stats.num_q) * sum;
}

Seconds predict_query_time(const WindowStats& stats, const ContainerLayout& candidate,
                           const CloudPricing& pricing) {
  return predict_query_time(stats, as_real(candidate), pricing);
}

Seconds reorg_time(double from_data_level, double to_data_level,
                   const ForecastConfig& cfg) {
  const double delta = std::abs(from_data_level - to_data_level);
  if (delta < 1e-12) return 0.0;  // no level-0 change, nothing moves
  const Bytes size = predicted_move_size(from_data_level, to_data_level, cfg.data_size);
  const Seconds t = size / (delta * cfg.arc * cfg.pricing.net_speed);
  return std::clamp(t, 0.0, cfg.w_p);
}

Seconds reorg_time(const ContainerLayout& l_h, const ContainerLayout& l_p,
                   const ForecastConfig& cfg) {
  return reorg_time(static_cast<double>(l_h[0]), static_cast<double>(l_p[0]), cfg);
}

ProfitBreakdown predict_profit_breakdown(const WindowStats& stats,
                                         std::span<const double> candidate,
                                         const ForecastConfig& cfg) {
  check_candidate(stats, candidate);
  if (stats.q_h.size() != cfg.slas.size())
    throw ConfigError("predict_profit: stats classes do not match configured SLAs");

  ProfitBreakdown bd;
  bd.t_p = predict_query_time(stats, candidate, cfg.pricing);
  bd.t_p_d = stats.l_h.height() > 0
                 ? reorg_time(static_cast<double>(stats.l_h[0]), candidate[0], cfg)
                 : 0.0;

  double total = 0.0;
  for (double v : candidate) total += v;
  bd.cost = operational_cost(total, cfg.w_p, cfg.pricing);

  if (stats.num_q > 0.0) {
    for (size_t k = 0; k < stats.q_h.size(); ++k) {
      const SlaSpec& sla = cfg.slas[k];
      const double q_pd = stats.q_h[k] * bd.t_p_d / stats.w_h;
      const double q_p = stats.q_h[k] * (cfg.w_p - bd.t_p_d) / stats.w_h;
      bd.revenue_reorg += q_pd * sla.alpha * std::exp(-(bd.t_p_d + bd.t_p) / sla.gamma);
      bd.revenue_steady += q_p * sla.alpha * std::exp(-bd.t_p / sla.gamma);
    }
  }
  bd.profit = (bd.revenue_reorg + bd.revenue_steady) - bd.cost;
  return bd;
}

Money predict_profit(const WindowStats& stats, std::span<const double> candidate,
                     const ForecastConfig& cfg) {
  return predict_profit_breakdown(stats, candidate, cfg).profit;
}

Money predict_profit(const WindowStats& stats, const ContainerLayout& candidate,
                     const ForecastConfig& cfg) {
  return predict_profit(stats, as_real(candidate), cfg);
}

namespace {

ContainerLayout ceil_round(const std::vector<double>& x, const LayoutBounds& bounds) {
  ContainerLayout rounded;
  rounded.levels.reserve(x.size());
  for (double v : x)
    rounded.levels.push_back(static_cast<int>(std::ceil(v - 1e-9)));
  return bounds.clamp(rounded);
}

// Greedy +-1 coordinate ascent on the integer grid, with paired moves on
// adjacent levels (the min(l[i-1], l[i]) throughput term forms diagonal
// ridges single-coordinate steps cannot follow). Cleans up ceiling artifacts
// and walks off plateaus the relaxed ascent cannot cross, notably the
// no-reorg ridge at l0 == L_H[0].
ContainerLayout integer_polish(const WindowStats& stats, const ForecastConfig& cfg,
                               ContainerLayout layout) {
  Money best = predict_profit(stats, layout, cfg);
  for (int step = 0; step < 400; ++step) {
    ContainerLayout best_neighbor = layout;
    Money best_profit = best;
    const auto consider = [&](const ContainerLayout& neighbor) {
      if (!cfg.bounds.contains(neighbor)) return;
      const Money p = predict_profit(stats, neighbor, cfg);
      if (p > best_profit) {
        best_profit = p;
        best_neighbor = neighbor;
      }
    };
    for (int i = 0; i < layout.height(); ++i) {
      for (int delta : {-1, 1}) {
        ContainerLayout neighbor = layout;
        neighbor[i] += delta;
        consider(neighbor);
        if (i + 1 < layout.height()) {
          neighbor[i + 1] += delta;
          consider(neighbor);
        }
      }
    }
    if (best_profit <= best) break;
    layout = best_neighbor;
    best = best_profit;
  }
  return layout;
}

}  // namespace

LayoutDecision optimize_layout(const WindowStats& stats, const ForecastConfig& cfg) {
  cfg.bounds.validate();
  const int h = cfg.bounds.height();
  if (stats.height() != h)
    throw BoundsError("optimize_layout: bounds height does not match stats");

  const ContainerLayout seed = cfg.bounds.clamp(stats.l_h);
  const std::vector<double> lo(cfg.bounds.min.begin(), cfg.bounds.min.end());
  const std::vector<double> hi(cfg.bounds.max.begin(), cfg.bounds.max.end());

  const auto objective = [&](std::span<const double> x) {
    return predict_profit(stats, x, cfg);
  };
  const AscentResult pga = maximize_in_box(objective, as_real(seed), lo, hi,
                                        cfg.max_opt_iters, cfg.grad_tol, cfg.fd_step);

  LayoutDecision decision;
  if (!pga.converged) {
    decision.layout = seed;
    decision.converged = false;
    decision.note = "optimizer hit the iteration cap; keeping the previous layout";
  } else {
    std::vector<ContainerLayout> candidates = {ceil_round(pga.x, cfg.bounds), seed};
    if (cfg.data_size > 0.0 && h > 1) {
      // Keeping the data level untouched avoids the re-organization penalty
      // entirely; the relaxed ascent cannot move along that ridge, so search
      // it separately with l0 pinned.
      std::vector<double> ridge_lo = lo, ridge_hi = hi;
      ridge_lo[0] = ridge_hi[0] = static_cast<double>(seed[0]);
      const AscentResult ridge = maximize_in_box(objective, as_real(seed), ridge_lo,
                                              ridge_hi, cfg.max_opt_iters,
                                              cfg.grad_tol, cfg.fd_step);
      if (ridge.converged) candidates.push_back(ceil_round(ridge.x, cfg.bounds));
    }
    // Fixed extra starts cover the regimes the seed's own basin can miss:
    // the revenue hump beyond a dead zone (mid, max) and the cost-minimal
    // idle corner across the re-organization penalty (min).
    std::vector<double> mid(static_cast<size_t>(h));
    for (int i = 0; i < h; ++i)
      mid[static_cast<size_t>(i)] = 0.5 * (lo[static_cast<size_t>(i)] + hi[static_cast<size_t>(i)]);
    for (const std::vector<double>& start : {mid, hi, lo}) {
      const AscentResult extra = maximize_in_box(objective, start, lo, hi,
                                              cfg.max_opt_iters, cfg.grad_tol,
                                              cfg.fd_step);
      if (extra.converged) candidates.push_back(ceil_round(extra.x, cfg.bounds));
    }
    ContainerLayout best = seed;
    Money best_profit = predict_profit(stats, seed, cfg);
    for (const ContainerLayout& candidate : candidates) {
      const ContainerLayout polished = integer_polish(stats, cfg, candidate);
      const Money p = predict_profit(stats, polished, cfg);
      if (p > best_profit) {
        best_profit = p;
        best = polished;
      }
    }
    decision.layout = best;
  }
  const ProfitBreakdown bd = predict_profit_breakdown(stats, as_real(decision.layout), cfg);
  decision.predicted_profit = bd.profit;
  decision.predicted_t_p = bd.t_p;
  decision.reorg_time = bd.t_p_d;
  return decision;
}

LayoutDecision enumerate_optimal(const WindowStats& stats, const ForecastConfig& cfg) {
  cfg.bounds.validate();
  const int h = cfg.bounds.height();
  if (stats.height() != h)
    throw BoundsError("enumerate_optimal: bounds height does not match stats");

  double combinations = 1.0;
  for (int i = 0; i < h; ++i) {
    const size_t u = static_cast<size_t>(i);
    combinations *= static_cast<double>(cfg.bounds.max[u] - cfg.bounds.min[u] + 1);
  }
  if (combinations > static_cast<double>(cfg.enum_cap))
    throw EnumCapError("enumerate_optimal: " + std::to_string(combinations) +
                       " layouts exceed the cap of " + std::to_string(cfg.enum_cap));

  ContainerLayout current{cfg.bounds.min};
  ContainerLayout best;
  Money best_profit = 0.0;
  bool have_best = false;
  std::vector<double> real(static_cast<size_t>(h));
  while (true) {
    for (int i = 0; i < h; ++i) real[static_cast<size_t>(i)] = current[i];
    const Money p = predict_profit(stats, real, cfg);
    // Strict improvement keeps the first (lexicographically smallest) argmax.
    if (!have_best || p > best_profit) {
      best = current;
      best_profit = p;
      have_best = true;
    }
    int i = h - 1;
    for (; i >= 0; --i) {
      if (current[i] < cfg.bounds.max[static_cast<size_t>(i)]) {
        ++current[i];
        for (int j = i + 1; j < h; ++j) current[j] = cfg.bounds.min[static_cast<size_t>(j)];
        break;
      }
    }
    if (i < 0) break;
  }

  LayoutDecision decision;
  decision.layout = best;
  const ProfitBreakdown bd = predict_profit_breakdown(stats, as_real(best), cfg);
  decision.predicted_profit = bd.profit;
  decision.predicted_t_p = bd.t_p;
  decision.reorg_time = bd.t_p_d;
  return decision;
}

}  // namespace elastree
