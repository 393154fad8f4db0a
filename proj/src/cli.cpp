// SPDX-License-Identifier: Apache-2.0

#include "elastree/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "elastree/csv.hpp"
#include "elastree/forecast.hpp"
#include "elastree/placement.hpp"
#include "elastree/rng.hpp"
#include "elastree/scenario.hpp"
#include "elastree/simulator.hpp"

namespace elastree {

namespace {

namespace fs = std::filesystem;

double round_cents(double usd) { return std::round(usd * 100.0) / 100.0; }

std::string mode_name(const SimConfig& cfg) {
  return cfg.mode == SimMode::kElastic ? "elastic" : "static";
}

void write_epochs_csv(const fs::path& path, const SimResult& result, int height) {
  std::ofstream out(path);
  out << "# schema: elastree.epochs.v1\n";
  std::vector<std::string> header = {"epoch",     "revenue_usd", "cost_usd",
                                     "profit_usd", "avg_exec_s",  "completed",
                                     "reorg_s",   "moved_partitions"};
  for (int i = 0; i < height; ++i) header.push_back("l" + std::to_string(i));
  csv_row(out, header);
  for (const EpochReport& e : result.epochs) {
    std::vector<std::string> row = {std::to_string(e.index),
                                    fmt_money(e.revenue),
                                    fmt_money(e.cost),
                                    fmt_money(e.profit),
                                    fmt_seconds(e.avg_exec_time),
                                    std::to_string(e.completed),
                                    fmt_seconds(e.reorg_seconds),
                                    std::to_string(e.moved_partitions)};
    for (int c : e.layout.levels) row.push_back(std::to_string(c));
    csv_row(out, row);
  }
}

void write_queries_csv(const fs::path& path, const SimResult& result,
                       const std::vector<std::string>& class_ids) {
  std::ofstream out(path);
  out << "# schema: elastree.queries.v1\n";
  csv_row(out, {"query", "class", "arrival_s", "finish_s", "exec_s", "price_usd"});
  for (const QueryRecord& q : result.queries)
    csv_row(out, {std::to_string(q.id), class_ids[static_cast<size_t>(q.class_index)],
                  fmt_seconds(q.arrival), fmt_seconds(q.finish),
                  fmt_seconds(q.finish - q.arrival), fmt_money(q.price)});
}

void write_summary_json(const fs::path& path, const Scenario& scenario,
                        const SimResult& result) {
  nlohmann::json j;
  j["schema"] = "elastree.summary.v1";
  j["seed"] = scenario.config.seed;
  j["mode"] = mode_name(scenario.config);
  j["layout_initial"] = scenario.config.initial_layout.levels;
  j["total_revenue_usd"] = round_cents(result.total_revenue);
  j["total_cost_usd"] = round_cents(result.total_cost);
  j["total_profit_usd"] = round_cents(result.total_profit);
  j["queries_arrived"] = result.queries_arrived;
  j["queries_completed"] = result.queries.size();
  j["epochs"] = result.epochs.size();
  j["total_quanta"] = result.total_quanta;
  j["max_concurrent_ops"] = result.max_concurrent_ops;
  j["optimizer_calls"] = result.optimizer_calls;
  j["diagnostics"] = result.diagnostics;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

fs::path resolve_out_dir(std::string flag_value) {
  if (const char* env = std::getenv("ELASTREE_OUT"); env && *env) return fs::path(env);
  if (flag_value.empty())
    throw ConfigError("no output directory: pass --out or set ELASTREE_OUT");
  return fs::path(flag_value);
}

int do_run(const std::string& scenario_path, const std::string& out_flag,
           std::optional<uint64_t> seed, const std::string& mode) {
  Scenario scenario = load_scenario_file(scenario_path);
  if (seed) scenario.config.seed = *seed;
  if (!mode.empty()) apply_mode_override(scenario, mode);
  scenario.config.validate();

  const fs::path dir = resolve_out_dir(out_flag);
  fs::create_directories(dir);

  const SimResult result = run(scenario.config);
  write_epochs_csv(dir / "epochs.csv", result, scenario.config.initial_layout.height());
  write_queries_csv(dir / "queries.csv", result, scenario.class_ids);
  write_summary_json(dir / "summary.json", scenario, result);

  std::cout << "mode=" << mode_name(scenario.config) << " seed=" << scenario.config.seed
            << " epochs=" << result.epochs.size() << " completed=" << result.queries.size()
            << "/" << result.queries_arrived << " revenue=$" << fmt_money(result.total_revenue)
            << " cost=$" << fmt_money(result.total_cost) << " profit=$"
            << fmt_money(result.total_profit) << '\n';
  for (const std::string& d : result.diagnostics) std::cerr << "note: " << d << '\n';
  return 0;
}

int do_sweep(const std::string& scenario_path, const std::string& out_flag,
             std::optional<uint64_t> seed, int num_seeds, const std::string& modes_flag,
             int jobs) {
  const Scenario base = load_scenario_file(scenario_path);
  const uint64_t base_seed = seed.value_or(base.config.seed);

  std::vector<std::string> modes;
  {
    std::stringstream ss(modes_flag);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) modes.push_back(item);
  }
  if (modes.empty()) throw ConfigError("--modes: empty mode list");

  struct Job {
    std::string mode;
    uint64_t seed;
  };
  std::vector<Job> jobs_list;
  for (const std::string& m : modes)
    for (int s = 0; s < num_seeds; ++s) jobs_list.push_back({m, base_seed + static_cast<uint64_t>(s)});

  struct Row {
    Job job;
    SimResult result;
  };
  std::vector<Row> rows(jobs_list.size());
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  // Each run is single-threaded and independent; fan out across workers.
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(jobs_list.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= jobs_list.size()) return;
        try {
          Scenario scenario = base;
          scenario.config.seed = jobs_list[i].seed;
          apply_mode_override(scenario, jobs_list[i].mode);
          scenario.config.validate();
          rows[i] = {jobs_list[i], run(scenario.config)};
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  const fs::path dir = resolve_out_dir(out_flag);
  fs::create_directories(dir);
  std::ofstream out(dir / "sweep.csv");
  out << "# schema: elastree.sweep.v1\n";
  csv_row(out, {"mode", "seed", "revenue_usd", "cost_usd", "profit_usd", "completed",
                "avg_exec_s"});
  nlohmann::json summary;
  summary["schema"] = "elastree.sweep-summary.v1";
  summary["seeds"] = num_seeds;
  summary["base_seed"] = base_seed;
  for (const std::string& m : modes) {
    double profit_sum = 0.0;
    for (const Row& r : rows) {
      if (r.job.mode != m) continue;
      double exec_sum = 0.0;
      for (const QueryRecord& q : r.result.queries) exec_sum += q.finish - q.arrival;
      const double avg = r.result.queries.empty()
                             ? 0.0
                             : exec_sum / static_cast<double>(r.result.queries.size());
      csv_row(out, {m, std::to_string(r.job.seed), fmt_money(r.result.total_revenue),
                    fmt_money(r.result.total_cost), fmt_money(r.result.total_profit),
                    std::to_string(r.result.queries.size()), fmt_seconds(avg)});
      profit_sum += r.result.total_profit;
    }
    summary["mean_profit_usd"][m] = round_cents(profit_sum / num_seeds);
  }
  std::ofstream sum_out(dir / "summary.json");
  sum_out << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return 0;
}

void print_decision(const char* label, const LayoutDecision& decision,
                    const WindowStats& stats, const ForecastConfig& cfg) {
  const std::vector<double> x(decision.layout.levels.begin(), decision.layout.levels.end());
  const ProfitBreakdown bd = predict_profit_breakdown(stats, x, cfg);
  std::cout << label << " layout=" << decision.layout.to_string()
            << " t_p=" << fmt_seconds(bd.t_p) << "s t_p_d=" << fmt_seconds(bd.t_p_d)
            << "s revenue=$" << fmt_money(bd.revenue_reorg + bd.revenue_steady)
            << " cost=$" << fmt_money(bd.cost) << " profit=$" << fmt_money(bd.profit)
            << '\n';
}

int do_optimize(const std::string& stats_path, bool oracle) {
  const OptimizeInput input = load_optimize_file(stats_path);
  const LayoutDecision chosen = optimize_layout(input.stats, input.config);
  print_decision("optimizer:", chosen, input.stats, input.config);
  if (!chosen.converged) std::cerr << "note: " << chosen.note << '\n';
  if (oracle) {
    const LayoutDecision exact = enumerate_optimal(input.stats, input.config);
    print_decision("oracle:   ", exact, input.stats, input.config);
    const double denom = std::max(std::abs(exact.predicted_profit), 1e-12);
    const double gap = (exact.predicted_profit - chosen.predicted_profit) / denom;
    std::cout << "gap: " << fmt_double(gap * 100.0) << "%\n";
  }
  return 0;
}

int do_validate_placement(int partitions, int replication, int arc, int grid_max,
                          int grid_step, int seeds, const std::string& out_file,
                          const std::string& dump_ring) {
  if (grid_max > 256) throw ConfigError("--grid-max: must be <= 256");
  if (grid_max < grid_step || grid_step < 1)
    throw ConfigError("--grid-step: need 1 <= step <= grid-max");

  std::vector<int> grid;
  for (int x = grid_step; x <= grid_max; x += grid_step) grid.push_back(x);

  // mean simulated moved fraction per (x, y) cell across seeds
  std::vector<std::vector<double>> sim(grid.size(), std::vector<double>(grid.size(), 0.0));
  for (int s = 0; s < seeds; ++s) {
    const uint64_t seed = split_seed(0xe1a57ee, "validate", static_cast<uint64_t>(s));
    std::vector<PartitionRing> rings;
    rings.reserve(grid.size());
    for (int x : grid)
      rings.push_back(PartitionRing::build(partitions, replication, x, arc, seed));
    for (size_t i = 0; i < grid.size(); ++i)
      for (size_t j = 0; j < grid.size(); ++j) {
        const auto [ring, report] = rings[i].resized(grid[j]);
        (void)ring;
        sim[i][j] += report.moved_fraction;
      }
  }

  std::ostringstream csv;
  csv << "# schema: elastree.placement-heatmap.v1\n";
  csv_row(csv, {"x", "y", "simulated_fraction", "model_fraction", "abs_error"});
  double total_error = 0.0;
  for (size_t i = 0; i < grid.size(); ++i)
    for (size_t j = 0; j < grid.size(); ++j) {
      const double simulated = sim[i][j] / seeds;
      const double model = predicted_move_size(grid[i], grid[j], 1.0);
      const double err = std::abs(simulated - model);
      total_error += err;
      csv_row(csv, {std::to_string(grid[i]), std::to_string(grid[j]),
                    fmt_double(simulated), fmt_double(model), fmt_double(err)});
    }
  const double mean_error = total_error / static_cast<double>(grid.size() * grid.size());

  if (!out_file.empty()) {
    std::ofstream out(out_file);
    out << csv.str();
  } else {
    std::cout << csv.str();
  }
  std::cout << "mean abs error: " << fmt_double(mean_error) << '\n';

  if (!dump_ring.empty()) {
    const PartitionRing sample = PartitionRing::build(
        partitions, replication, grid.back(), arc, split_seed(0xe1a57ee, "validate", 0));
    std::ofstream out(dump_ring);
    out << sample.to_json() << '\n';
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"elastree: SLA-priced analytical-query workloads on a simulated "
               "elastic cloud.\n"
               "CSV schemas (all files start with a '# schema:' line):\n"
               "  epochs.csv:  epoch, revenue_usd, cost_usd, profit_usd, avg_exec_s,\n"
               "               completed, reorg_s, moved_partitions, l0..lN (containers/level)\n"
               "  queries.csv: query, class, arrival_s, finish_s, exec_s, price_usd\n"
               "  sweep.csv:   mode, seed, revenue_usd, cost_usd, profit_usd, completed, avg_exec_s\n"
               "  heatmap:     x, y, simulated_fraction, model_fraction, abs_error\n"
               "Exit codes: 0 ok, 2 invalid scenario/usage, 3 unsatisfiable bounds,\n"
               "4 enumeration cap exceeded, 1 other errors."};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, mode;
  std::optional<uint64_t> seed;

  CLI::App* run_cmd = app.add_subcommand("run", "Simulate one scenario; writes epochs.csv, "
                                                "queries.csv, summary.json to --out "
                                                "(ELASTREE_OUT overrides).");
  run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--mode", mode, "Override the mode: elastic or static:<name>");

  int sweep_seeds = 5;
  int sweep_jobs = static_cast<int>(std::thread::hardware_concurrency());
  std::string sweep_modes = "elastic,static:small,static:medium,static:large";
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Run a scenario across seeds and modes in parallel; writes sweep.csv "
               "and summary.json (per-mode mean profit).");
  sweep_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory");
  sweep_cmd->add_option("--seed", seed, "Base seed (default: scenario seed)");
  sweep_cmd->add_option("--seeds", sweep_seeds, "Number of seeds (base, base+1, ...)");
  sweep_cmd->add_option("--modes", sweep_modes, "Comma-separated mode list");
  sweep_cmd->add_option("--jobs", sweep_jobs, "Worker threads");

  bool oracle = false;
  CLI::App* opt_cmd = app.add_subcommand(
      "optimize", "One-shot layout decision from a stats fixture; prints layout, t_p, "
                  "t_p_d, revenue, cost, profit. --oracle cross-checks against exact "
                  "enumeration (exit 4 if the box exceeds the cap).");
  opt_cmd->add_option("stats", scenario_path, "Stats+config JSON file")->required();
  opt_cmd->add_flag("--oracle", oracle, "Also run the enumeration oracle and print the gap");

  int vp_partitions = 128, vp_replication = 3, vp_arc = 4;
  int vp_grid_max = 128, vp_grid_step = 16, vp_seeds = 20;
  std::string vp_out, vp_dump_ring;
  CLI::App* vp_cmd = app.add_subcommand(
      "validate-placement", "Compare simulated re-organization cost against the "
                            "analytical movement model over an (x, y) container grid; "
                            "emits heatmap CSV and prints the mean absolute error.");
  vp_cmd->add_option("--partitions", vp_partitions, "Partitions on the inner circle");
  vp_cmd->add_option("--replication", vp_replication, "Replicas per partition");
  vp_cmd->add_option("--arc", vp_arc, "Local rebalancing window");
  vp_cmd->add_option("--grid-max", vp_grid_max, "Largest container count (<= 256)");
  vp_cmd->add_option("--grid-step", vp_grid_step, "Grid step");
  vp_cmd->add_option("--seeds", vp_seeds, "Seeds to average over");
  vp_cmd->add_option("--out", vp_out, "Heatmap CSV file (default: stdout)");
  vp_cmd->add_option("--dump-ring", vp_dump_ring, "Write a sample ring as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return do_run(scenario_path, out_dir, seed, mode);
    if (sweep_cmd->parsed())
      return do_sweep(scenario_path, out_dir, seed, sweep_seeds, sweep_modes, sweep_jobs);
    if (opt_cmd->parsed()) return do_optimize(scenario_path, oracle);
    if (vp_cmd->parsed())
      return do_validate_placement(vp_partitions, vp_replication, vp_arc, vp_grid_max,
                                   vp_grid_step, vp_seeds, vp_out, vp_dump_ring);
  } catch (const EnumCapError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const BoundsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace elastree
