// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "elastree/rng.hpp"
#include "elastree/simulator.hpp"

using namespace elastree;

namespace {

const SlaSpec kExampleSla{15.0, 20.0};

// The two concurrently issued queries of the worked example: 16 leaf
// operators total, L1 split 2 + 4, all operators one second.
TreePlanProfile example_q1() { return {{8, 2, 1, 1}, {1, 1, 1, 1}, {0, 0, 0, 0}}; }
TreePlanProfile example_q2() { return {{8, 4, 2, 1}, {1, 1, 1, 1}, {0, 0, 0, 0}}; }

SimConfig two_query_config(std::vector<int> layout) {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 300.0;
  cfg.pricing = {300.0, 1.0, 18.75e6};  // $1 per container per window
  cfg.initial_layout = ContainerLayout{std::move(layout)};
  cfg.bounds.min.assign(4, 1);
  cfg.bounds.max.assign(4, 64);
  cfg.capacity = 1;  // one operator at a time: level delay = ops/containers
  cfg.classes = {{"q1", kExampleSla, example_q1()}, {"q2", kExampleSla, example_q2()}};
  cfg.arrivals = {{0.0, 0}, {0.0, 1}};
  cfg.mode = SimMode::kStatic;
  cfg.seed = 1;
  return cfg;
}

std::string fingerprint(const SimResult& r) {
  std::ostringstream out;
  out.precision(17);
  for (const EpochReport& e : r.epochs)
    out << e.index << '|' << e.layout.to_string() << '|' << e.revenue << '|' << e.cost
        << '|' << e.reorg_seconds << '|' << e.moved_partitions << '\n';
  for (const QueryRecord& q : r.queries)
    out << q.id << '|' << q.class_index << '|' << q.arrival << '|' << q.finish << '|'
        << q.price << '\n';
  out << r.total_revenue << '|' << r.total_cost << '|' << r.total_quanta;
  return out.str();
}

}  // namespace

TEST_CASE("two-query example, layout A: times 13/14, profit 8.27") {
  const SimResult r = run(two_query_config({2, 2, 2, 1}));
  REQUIRE(r.queries.size() == 2);
  CHECK(r.queries[0].finish == doctest::Approx(13.0).epsilon(1e-9));
  CHECK(r.queries[1].finish == doctest::Approx(14.0).epsilon(1e-9));
  CHECK(r.total_cost == doctest::Approx(7.0));
  CHECK(r.total_revenue == doctest::Approx(15.2793).epsilon(1e-4));
  CHECK(r.total_profit == doctest::Approx(8.2793).epsilon(1e-4));
}

TEST_CASE("two-query example, layout B: times 9/10, profit 9.66") {
  const SimResult r = run(two_query_config({4, 2, 2, 1}));
  REQUIRE(r.queries.size() == 2);
  CHECK(r.queries[0].finish == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(r.queries[1].finish == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(r.total_cost == doctest::Approx(9.0));
  CHECK(r.total_revenue == doctest::Approx(18.6624).epsilon(1e-4));
  CHECK(r.total_profit == doctest::Approx(9.6624).epsilon(1e-4));
}

TEST_CASE("two-query example, layout C: times 6/7, profit 6.68") {
  const SimResult r = run(two_query_config({8, 4, 2, 1}));
  REQUIRE(r.queries.size() == 2);
  CHECK(r.queries[0].finish == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(r.queries[1].finish == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(r.total_cost == doctest::Approx(15.0));
  CHECK(r.total_profit == doctest::Approx(6.6825).epsilon(1e-4));
}

TEST_CASE("zero arrivals: pure cost") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 300.0;
  cfg.pricing = {300.0, 0.41, 18.75e6};
  cfg.initial_layout = ContainerLayout{{10, 4, 1}};
  cfg.bounds = {{1, 1, 1}, {64, 16, 4}};
  cfg.classes = {{"q1", {10.0, 80.0}, {{4, 2, 1}, {1, 1, 1}, {0, 0, 0}}}};
  cfg.mode = SimMode::kStatic;
  const SimResult r = run(cfg);
  CHECK(r.queries.empty());
  CHECK(r.total_revenue == 0.0);
  CHECK(r.total_cost == doctest::Approx(6.15));
  CHECK(r.total_profit == doctest::Approx(-6.15));
  CHECK(r.total_quanta == 15);
}

TEST_CASE("inter-level transfer delay uses min of adjacent level counts") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 300.0;
  cfg.pricing = {300.0, 1.0, 18.75e6};
  cfg.initial_layout = ContainerLayout{{2, 1}};
  cfg.bounds = {{1, 1}, {8, 8}};
  cfg.capacity = 1;
  // Two leaves emit 37.5 MB each: 75 MB over 18.75 MB/s * min(2,1) = 4 s.
  cfg.classes = {{"q", {10.0, 80.0}, {{2, 1}, {3.0, 2.0}, {37.5e6, 0.0}}}};
  cfg.arrivals = {{0.0, 0}};
  cfg.mode = SimMode::kStatic;
  const SimResult r = run(cfg);
  REQUIRE(r.queries.size() == 1);
  CHECK(r.queries[0].finish == doctest::Approx(3.0 + 4.0 + 2.0).epsilon(1e-9));
}

TEST_CASE("same seed, same config: bit-identical trace") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 1200.0;
  cfg.pricing = {300.0, 0.41, 18.75e6};
  cfg.initial_layout = ContainerLayout{{6, 2, 1}};
  cfg.bounds = {{1, 1, 1}, {32, 8, 2}};
  cfg.capacity = 4;
  cfg.classes = {{"q1", {10.0, 80.0}, {{8, 2, 1}, {4.0, 1.0, 1.0}, {1e6, 1e5, 0.0}}}};
  cfg.phases = {{1200.0, 0, 20.0}};
  cfg.mode = SimMode::kElastic;
  cfg.data_size = 1e9;
  cfg.seed = 42;
  const SimResult a = run(cfg);
  const SimResult b = run(cfg);
  CHECK(fingerprint(a) == fingerprint(b));
  CHECK(a.queries_arrived > 10);
}

TEST_CASE("accounting identities hold on a dynamic elastic run") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 1800.0;
  cfg.pricing = {300.0, 0.41, 18.75e6};
  cfg.initial_layout = ContainerLayout{{8, 3, 1}};
  cfg.bounds = {{1, 1, 1}, {32, 8, 2}};
  cfg.capacity = 2;
  cfg.classes = {{"q1", {10.0, 80.0}, {{10, 3, 1}, {3.0, 1.0, 0.5}, {2e6, 1e5, 0.0}}},
                 {"hot", {20.0, 40.0}, {{6, 2, 1}, {2.0, 1.0, 0.5}, {1e6, 1e5, 0.0}}}};
  cfg.phases = {{900.0, 0, 30.0}, {900.0, 1, 45.0}};
  cfg.mode = SimMode::kElastic;
  cfg.data_size = 2e9;
  cfg.seed = 7;
  const SimResult r = run(cfg);

  double price_sum = 0.0;
  for (const QueryRecord& q : r.queries) price_sum += q.price;
  CHECK(r.total_revenue == doctest::Approx(price_sum).epsilon(1e-12));

  double epoch_revenue = 0.0, epoch_cost = 0.0;
  int epoch_completed = 0;
  for (const EpochReport& e : r.epochs) {
    epoch_revenue += e.revenue;
    epoch_cost += e.cost;
    epoch_completed += e.completed;
    CHECK(e.profit == doctest::Approx(e.revenue - e.cost).epsilon(1e-12));
  }
  CHECK(epoch_revenue == doctest::Approx(r.total_revenue).epsilon(1e-12));
  CHECK(epoch_cost == doctest::Approx(r.total_cost).epsilon(1e-12));
  CHECK(epoch_completed == static_cast<int>(r.queries.size()));

  // Billing is whole quanta.
  CHECK(r.total_cost ==
        doctest::Approx(0.41 * static_cast<double>(r.total_quanta)).epsilon(1e-12));

  // Capacity is never exceeded.
  CHECK(r.max_concurrent_ops <= cfg.capacity);
  CHECK(r.max_concurrent_ops >= 1);
}

TEST_CASE("static mode never calls the optimizer and keeps the layout") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 1500.0;
  cfg.pricing = {300.0, 0.41, 18.75e6};
  cfg.initial_layout = ContainerLayout{{10, 4, 1}};
  cfg.bounds = {{1, 1, 1}, {64, 16, 4}};
  cfg.classes = {{"q1", {10.0, 80.0}, {{8, 2, 1}, {2.0, 1.0, 1.0}, {0, 0, 0}}}};
  cfg.phases = {{1500.0, 0, 40.0}};
  cfg.mode = SimMode::kStatic;
  cfg.seed = 3;
  const SimResult r = run(cfg);
  CHECK(r.optimizer_calls == 0);
  REQUIRE(r.epochs.size() == 5);
  for (const EpochReport& e : r.epochs)
    CHECK(e.layout == ContainerLayout{{10, 4, 1}});
}

TEST_CASE("elastic shrink on idle stats reaches the bounds minimum and records reorg") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 600.0;
  cfg.pricing = {300.0, 0.41, 18.75e6};
  cfg.initial_layout = ContainerLayout{{4, 2, 1}};
  cfg.bounds = {{1, 1, 1}, {8, 4, 2}};
  cfg.classes = {{"q1", {10.0, 80.0}, {{4, 2, 1}, {1, 1, 1}, {0, 0, 0}}}};
  cfg.mode = SimMode::kElastic;
  cfg.w_h = 300.0;  // full history after one epoch: decisions start at t=300
  // size_d(4,1) = 0.75 * 3e9; reorg = that / (3 * 4 * 18.75e6) = 10 s.
  cfg.data_size = 3e9;
  const SimResult r = run(cfg);
  REQUIRE(r.epochs.size() == 2);
  CHECK(r.epochs[0].layout == ContainerLayout{{4, 2, 1}});
  CHECK(r.epochs[1].layout == ContainerLayout{{1, 1, 1}});
  CHECK(r.epochs[1].reorg_seconds == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(r.epochs[1].moved_partitions > 0);
  CHECK(r.optimizer_calls == 1);
  // Epoch 0 pays 7 quanta; epoch 1 pays only the three survivors.
  CHECK(r.epochs[0].cost == doctest::Approx(7 * 0.41));
  CHECK(r.epochs[1].cost == doctest::Approx(3 * 0.41));
}

TEST_CASE("shrink then grow inside one quantum reuses parked containers") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 900.0;
  cfg.pricing = {900.0, 0.41, 18.75e6};  // one quantum spans all three epochs
  cfg.initial_layout = ContainerLayout{{4, 1, 1}};
  cfg.bounds = {{1, 1, 1}, {4, 1, 1}};
  cfg.capacity = 1;
  cfg.w_h = 300.0;
  cfg.classes = {{"heavy", {100.0, 40.0}, {{4, 2, 1}, {30.0, 1.0, 1.0}, {0, 0, 0}}}};
  // Idle first epoch (shrink), then a burst that makes the optimizer grow.
  cfg.arrivals = {{310.0, 0}, {320.0, 0}, {330.0, 0}, {340.0, 0},
                  {350.0, 0}, {360.0, 0}, {370.0, 0}, {380.0, 0}};
  cfg.mode = SimMode::kElastic;
  const SimResult r = run(cfg);
  REQUIRE(r.epochs.size() == 3);
  CHECK(r.epochs[1].layout == ContainerLayout{{1, 1, 1}});
  CHECK(r.epochs[2].layout[0] > 1);  // grew back
  // Six containers, one 900 s quantum each, zero fresh allocations.
  CHECK(r.total_quanta == 6);
  CHECK(r.total_cost == doctest::Approx(6 * 0.41));
}

TEST_CASE("work conservation: every query completes given headroom") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 1800.0;
  cfg.pricing = {300.0, 0.41, 18.75e6};
  cfg.initial_layout = ContainerLayout{{6, 2, 1}};
  cfg.bounds = {{1, 1, 1}, {32, 8, 2}};
  cfg.capacity = 4;
  cfg.classes = {{"q1", {10.0, 80.0}, {{6, 2, 1}, {2.0, 1.0, 0.5}, {0, 0, 0}}}};
  cfg.phases = {{900.0, 0, 25.0}};  // arrivals only in the first half
  cfg.mode = SimMode::kElastic;
  cfg.seed = 11;
  const SimResult r = run(cfg);
  CHECK(r.queries_arrived > 0);
  CHECK(static_cast<int>(r.queries.size()) == r.queries_arrived);
}

TEST_CASE("unsatisfiable bounds are rejected before the run starts") {
  SimConfig cfg;
  cfg.epoch = 300.0;
  cfg.horizon = 300.0;
  cfg.pricing = {300.0, 0.41, 18.75e6};
  cfg.initial_layout = ContainerLayout{{10, 4, 1}};
  cfg.bounds = {{1, 1, 1}, {8, 4, 2}};  // max below the initial data level
  cfg.classes = {{"q1", {10.0, 80.0}, {{4, 2, 1}, {1, 1, 1}, {0, 0, 0}}}};
  cfg.mode = SimMode::kStatic;
  CHECK_THROWS_AS(run(cfg), BoundsError);
}

TEST_CASE("arrival generator: mean gap within 5% of lambda") {
  for (const double lambda : {30.0, 60.0}) {
    Rng rng(split_seed(2024, "poisson", static_cast<uint64_t>(lambda)));
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) sum += rng.next_exponential(lambda);
    const double mean = sum / n;
    CHECK(std::abs(mean - lambda) / lambda < 0.05);
  }
}

TEST_CASE("arrival generator: rate scales with lambda") {
  const auto a30 = generate_arrivals(30.0, 10000.0, 5);
  const auto a60 = generate_arrivals(60.0, 10000.0, 5);
  const double ratio = static_cast<double>(a30.size()) / static_cast<double>(a60.size());
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);

  const auto hour = generate_arrivals(60.0, 3600.0, 7);
  CHECK(hour.size() > 40);
  CHECK(hour.size() < 80);

  CHECK(generate_arrivals(60.0, 0.0, 8).empty());
}
