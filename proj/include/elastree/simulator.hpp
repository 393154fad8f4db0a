// SPDX-License-Identifier: Apache-2.0
//
// Discrete-event engine: Poisson (or injected) arrivals, operator-level
// execution with per-container capacity and FIFO queues, epoch-boundary
// layout re-optimization, consistent-hash data re-organization, and
// whole-quantum billing with deferred deletion and container reuse.
//
// Execution discipline: a query's operators are assigned to containers at
// arrival. Level 0 starts immediately. Queries that arrive at the same
// instant form a cohort whose interior aggregation levels are released
// together when the cohort drains the level below (modeling fair operator
// interleaving of concurrently admitted queries); each query's root operator
// is released as soon as its own partial aggregates are ready. Poisson
// arrivals virtually never coincide, so streaming workloads reduce to plain
// per-query level barriers.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elastree/forecast.hpp"
#include "elastree/model.hpp"
#include "elastree/placement.hpp"

namespace elastree {

enum class SimMode { kElastic, kStatic };

struct Phase {
  Seconds duration = 0.0;
  int class_index = 0;
  double lambda = 60.0;  // mean inter-arrival gap, seconds
};

struct ArrivalSpec {
  Seconds time = 0.0;
  int class_index = 0;
};

struct SimConfig {
  Seconds epoch = 300.0;
  Seconds horizon = 300.0;
  CloudPricing pricing;
  ContainerLayout initial_layout;
  LayoutBounds bounds;
  int capacity = 10;  // concurrent operators per container
  std::vector<QueryClass> classes;
  std::vector<Phase> phases;
  std::vector<ArrivalSpec> arrivals;  // when non-empty, replaces the phases
  uint64_t seed = 0;
  SimMode mode = SimMode::kElastic;
  Seconds w_h = 600.0;  // historical window feeding the forecaster
  int arc = 4;
  Bytes data_size = 0.0;
  int partitions = 128;
  int replication = 3;
  long enum_cap = 1'000'000;
  int max_opt_iters = 500;

  void validate() const;
};

struct EpochReport {
  int index = 0;
  ContainerLayout layout;  // containers per level in force this epoch
  Money revenue = 0.0;
  Money cost = 0.0;
  Money profit = 0.0;
  Seconds avg_exec_time = 0.0;
  int completed = 0;
  Seconds reorg_seconds = 0.0;
  long moved_partitions = 0;
};

struct QueryRecord {
  int id = 0;
  int class_index = 0;
  Seconds arrival = 0.0;
  Seconds finish = 0.0;
  Money price = 0.0;
};

struct SimResult {
  std::vector<EpochReport> epochs;
  std::vector<QueryRecord> queries;  // completed queries, completion order
  int queries_arrived = 0;
  Money total_revenue = 0.0;
  Money total_cost = 0.0;
  Money total_profit = 0.0;
  long total_quanta = 0;        // container-quanta charged
  int max_concurrent_ops = 0;   // peak operators running on one container
  int optimizer_calls = 0;
  std::vector<std::string> diagnostics;
};

// Timestamps with inter-arrival gaps drawn i.i.d. exponential with the given
// mean, within [0, duration). Deterministic per seed.
std::vector<Seconds> generate_arrivals(double mean_gap, Seconds duration,
                                       uint64_t seed);

SimResult run(const SimConfig& config);

}  // namespace elastree
