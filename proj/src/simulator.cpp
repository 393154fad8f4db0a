// SPDX-License-Identifier: Apache-2.0

#include "elastree/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>

#include "elastree/rng.hpp"
#include "elastree/scheduler.hpp"

namespace elastree {

void SimConfig::validate() const {
  if (!(epoch > 0.0)) throw ConfigError("SimConfig: epoch must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("SimConfig: horizon must be > 0");
  const double ratio = horizon / epoch;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("SimConfig: horizon must be a whole number of epochs");
  pricing.validate();
  initial_layout.validate();
  bounds.validate();
  if (bounds.height() != initial_layout.height())
    throw BoundsError("SimConfig: bounds height differs from the layout height");
  if (!bounds.contains(initial_layout))
    throw BoundsError("SimConfig: initial layout violates the bounds");
  if (capacity < 1) throw ConfigError("SimConfig: capacity must be >= 1");
  if (classes.empty()) throw ConfigError("SimConfig: need at least one query class");
  for (const QueryClass& c : classes) {
    c.validate();
    if (c.plan.height() > initial_layout.height())
      throw ConfigError("SimConfig: plan '" + c.id + "' is taller than the layout");
  }
  for (const Phase& p : phases) {
    if (!(p.duration > 0.0)) throw ConfigError("SimConfig: phase duration must be > 0");
    if (!(p.lambda > 0.0)) throw ConfigError("SimConfig: phase lambda must be > 0");
    if (p.class_index < 0 || p.class_index >= static_cast<int>(classes.size()))
      throw ConfigError("SimConfig: phase references an unknown class");
  }
  for (const ArrivalSpec& a : arrivals) {
    if (a.time < 0.0) throw ConfigError("SimConfig: arrival before t=0");
    if (a.class_index < 0 || a.class_index >= static_cast<int>(classes.size()))
      throw ConfigError("SimConfig: arrival references an unknown class");
  }
  if (!(w_h > 0.0)) throw ConfigError("SimConfig: w_h must be > 0");
  if (partitions < 1 || replication < 1 || arc < 1)
    throw ConfigError("SimConfig: partitions, replication, and arc must be >= 1");
}

std::vector<Seconds> generate_arrivals(double mean_gap, Seconds duration,
                                       uint64_t seed) {
  if (!(mean_gap > 0.0)) throw ConfigError("generate_arrivals: lambda must be > 0");
  std::vector<Seconds> times;
  Rng rng(seed);
  Seconds t = 0.0;
  while (true) {
    t += rng.next_exponential(mean_gap);
    if (t >= duration) break;
    times.push_back(t);
  }
  return times;
}

namespace {

enum class EventKind : uint8_t { kBoundary, kArrival, kRelease, kFinish, kLease };

struct Event {
  Seconds t = 0.0;
  uint64_t seq = 0;
  EventKind kind = EventKind::kBoundary;
  int a = 0, b = 0, c = 0;
};

struct EventAfter {
  bool operator()(const Event& x, const Event& y) const {
    if (x.t != y.t) return x.t > y.t;
    return x.seq > y.seq;
  }
};

struct QueuedOp {
  int query = 0;
  int plan_level = 0;
  Seconds duration = 0.0;
};

struct Container {
  int id = 0;
  int level = 0;
  Seconds lease_end = 0.0;
  bool pending_delete = false;
  int load = 0;  // assigned and not yet completed operators
  int running = 0;
  std::deque<QueuedOp> fifo;
};

struct Query {
  int id = 0;
  int class_index = 0;
  Seconds arrival = 0.0;
  int cohort = -1;
  OperatorAssignment assignment;
  std::vector<int> remaining;  // per plan level
};

struct Cohort {
  std::vector<int> members;
  std::vector<long> outstanding;  // per plan level, across members
};

struct EpochAccum {
  int index = 0;
  ContainerLayout layout;
  Money revenue = 0.0;
  Money cost = 0.0;
  Seconds exec_sum = 0.0;
  int completed = 0;
  Seconds reorg_seconds = 0.0;
  long moved_partitions = 0;
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg)
      : cfg_(cfg), ring_(PartitionRing::build(cfg.partitions, cfg.replication,
                                              cfg.initial_layout[0], cfg.arc,
                                              split_seed(cfg.seed, "ring"))) {}

  SimResult run() {
    target_ = cfg_.initial_layout;
    accum_ = EpochAccum{0, target_, 0, 0, 0, 0, 0, 0};

    const int num_epochs = static_cast<int>(std::llround(cfg_.horizon / cfg_.epoch));
    for (int k = 1; k <= num_epochs; ++k)
      push({static_cast<Seconds>(k) * cfg_.epoch, next_seq_++, EventKind::kBoundary, k});

    build_arrival_list();
    for (size_t i = 0; i < arrival_list_.size(); ++i)
      push({arrival_list_[i].time, next_seq_++, EventKind::kArrival,
            static_cast<int>(i)});

    for (int level = 0; level < target_.height(); ++level)
      for (int n = 0; n < target_[level]; ++n) allocate_container(level, 0.0);

    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      switch (ev.kind) {
        case EventKind::kBoundary:
          on_boundary(ev);
          break;
        case EventKind::kArrival:
          on_arrival(ev);
          break;
        case EventKind::kRelease:
          on_release(ev);
          break;
        case EventKind::kFinish:
          on_finish(ev);
          break;
        case EventKind::kLease:
          on_lease(ev);
          break;
      }
      if (done_) break;
    }

    result_.total_profit = result_.total_revenue - result_.total_cost;
    return std::move(result_);
  }

 private:
  void push(Event ev) { events_.push(ev); }

  const TreePlanProfile& plan_of(int class_index) const {
    return cfg_.classes[static_cast<size_t>(class_index)].plan;
  }

  void build_arrival_list() {
    if (!cfg_.arrivals.empty()) {
      arrival_list_ = cfg_.arrivals;
      std::stable_sort(arrival_list_.begin(), arrival_list_.end(),
                       [](const ArrivalSpec& a, const ArrivalSpec& b) {
                         return a.time < b.time;
                       });
    } else {
      Seconds offset = 0.0;
      for (size_t i = 0; i < cfg_.phases.size(); ++i) {
        const Phase& phase = cfg_.phases[i];
        const uint64_t seed = split_seed(cfg_.seed, "arrivals", i);
        for (Seconds t : generate_arrivals(phase.lambda, phase.duration, seed))
          arrival_list_.push_back({offset + t, phase.class_index});
        offset += phase.duration;
      }
    }
    std::erase_if(arrival_list_,
                  [&](const ArrivalSpec& a) { return a.time >= cfg_.horizon; });
  }

  // --- containers & billing ---------------------------------------------

  void charge_quantum(Seconds /*now*/) {
    accum_.cost += cfg_.pricing.quantum_cost;
    result_.total_cost += cfg_.pricing.quantum_cost;
    ++result_.total_quanta;
  }

  int allocate_container(int level, Seconds now) {
    Container c;
    c.id = next_container_id_++;
    c.level = level;
    c.lease_end = now + cfg_.pricing.quantum;
    charge_quantum(now);
    if (c.lease_end < cfg_.horizon)
      push({c.lease_end, next_seq_++, EventKind::kLease, c.id});
    containers_.emplace(c.id, std::move(c));
    return next_container_id_ - 1;
  }

  void on_lease(const Event& ev) {
    const auto it = containers_.find(ev.a);
    if (it == containers_.end()) return;  // destroyed earlier
    Container& c = it->second;
    if (c.pending_delete && c.load == 0 && c.running == 0 && c.fifo.empty()) {
      containers_.erase(it);  // quantum over, nothing left to do
      return;
    }
    // Still part of the layout, or still holding work: renew for a full
    // quantum (a container cannot be released mid-operator).
    charge_quantum(ev.t);
    c.lease_end += cfg_.pricing.quantum;
    if (c.lease_end < cfg_.horizon)
      push({c.lease_end, next_seq_++, EventKind::kLease, c.id});
  }

  void apply_level_target(int level, int target, Seconds now) {
    std::vector<Container*> active, parked;
    for (auto& [id, c] : containers_)
      if (c.level == level) (c.pending_delete ? parked : active).push_back(&c);

    const int current = static_cast<int>(active.size());
    if (target < current) {
      // Shed the containers whose paid quantum ends soonest; among equal
      // lease ends prefer the idlest, which can drain and die without
      // renewing.
      std::sort(active.begin(), active.end(), [](const Container* a, const Container* b) {
        if (a->lease_end != b->lease_end) return a->lease_end < b->lease_end;
        if (a->load != b->load) return a->load < b->load;
        return a->id < b->id;
      });
      for (int i = 0; i < current - target; ++i) active[static_cast<size_t>(i)]->pending_delete = true;
    } else if (target > current) {
      int need = target - current;
      // Reuse parked containers (longest remaining lease first) before
      // paying for fresh ones.
      std::sort(parked.begin(), parked.end(), [](const Container* a, const Container* b) {
        if (a->lease_end != b->lease_end) return a->lease_end > b->lease_end;
        return a->id < b->id;
      });
      for (Container* c : parked) {
        if (need == 0) break;
        c->pending_delete = false;
        --need;
      }
      while (need-- > 0) allocate_container(level, now);
    }
  }

  // --- epoch boundaries ---------------------------------------------------

  void finalize_epoch() {
    EpochReport report;
    report.index = accum_.index;
    report.layout = accum_.layout;
    report.revenue = accum_.revenue;
    report.cost = accum_.cost;
    report.profit = accum_.revenue - accum_.cost;
    report.avg_exec_time = accum_.completed > 0 ? accum_.exec_sum / accum_.completed : 0.0;
    report.completed = accum_.completed;
    report.reorg_seconds = accum_.reorg_seconds;
    report.moved_partitions = accum_.moved_partitions;
    result_.epochs.push_back(std::move(report));
  }

  void on_boundary(const Event& ev) {
    finalize_epoch();
    if (ev.t >= cfg_.horizon) {
      done_ = true;
      return;
    }
    accum_ = EpochAccum{};
    accum_.index = ev.a;

    // The bootstrap layout stays in force until a full historical window
    // exists; deciding from a thin sample swings the allocation wildly.
    if (cfg_.mode == SimMode::kElastic && ev.t >= cfg_.w_h) reoptimize(ev.t);
    accum_.layout = target_;
  }

  void reoptimize(Seconds now) {
    const Seconds w_h_eff = std::min(cfg_.w_h, now);
    while (!window_.empty() && window_.front().finish <= now - cfg_.w_h)
      window_.pop_front();
    std::vector<CompletedQuery> recent;
    recent.reserve(window_.size());
    for (const CompletedQuery& q : window_)
      if (q.finish > now - w_h_eff && q.finish <= now) recent.push_back(q);

    const WindowStats stats = collect_stats(recent, cfg_.classes, target_, w_h_eff);
    const ForecastConfig fcfg = forecast_config();
    const LayoutDecision decision = optimize_layout(stats, fcfg);
    ++result_.optimizer_calls;
    if (!decision.converged)
      result_.diagnostics.push_back("t=" + std::to_string(now) + ": " + decision.note);

    if (decision.layout != target_) {
      for (int level = 0; level < target_.height(); ++level)
        if (decision.layout[level] != target_[level])
          apply_level_target(level, decision.layout[level], now);
      if (decision.layout[0] != target_[0]) {
        auto [next_ring, report] = ring_.resized(decision.layout[0], cfg_.data_size);
        ring_ = std::move(next_ring);
        accum_.moved_partitions = report.moved_partitions;
      }
      accum_.reorg_seconds = decision.reorg_time;
      target_ = decision.layout;
    }
  }

  ForecastConfig forecast_config() const {
    ForecastConfig fcfg;
    fcfg.w_p = cfg_.epoch;
    fcfg.pricing = cfg_.pricing;
    fcfg.arc = cfg_.arc;
    fcfg.data_size = cfg_.data_size;
    fcfg.bounds = cfg_.bounds;
    fcfg.enum_cap = cfg_.enum_cap;
    fcfg.max_opt_iters = cfg_.max_opt_iters;
    fcfg.slas.reserve(cfg_.classes.size());
    for (const QueryClass& c : cfg_.classes) fcfg.slas.push_back(c.sla);
    return fcfg;
  }

  // --- queries ------------------------------------------------------------

  void on_arrival(const Event& ev) {
    const ArrivalSpec& spec = arrival_list_[static_cast<size_t>(ev.a)];
    ++result_.queries_arrived;

    Query q;
    q.id = next_query_id_++;
    q.class_index = spec.class_index;
    q.arrival = ev.t;

    // Queries admitted at the same instant form a cohort.
    if (cohorts_.empty() || ev.t != last_arrival_time_) {
      cohorts_.push_back({});
      last_arrival_time_ = ev.t;
    }
    q.cohort = static_cast<int>(cohorts_.size()) - 1;
    Cohort& cohort = cohorts_.back();
    cohort.members.push_back(q.id);

    const TreePlanProfile& plan = plan_of(q.class_index);
    q.assignment = schedule(q.id, plan, target_.height(), container_states());
    q.remaining.assign(plan.op_count.begin(), plan.op_count.end());
    if (cohort.outstanding.size() < static_cast<size_t>(plan.height()))
      cohort.outstanding.resize(static_cast<size_t>(plan.height()), 0);
    for (int j = 0; j < plan.height(); ++j) {
      cohort.outstanding[static_cast<size_t>(j)] += plan.op_count[static_cast<size_t>(j)];
      for (int id : q.assignment.per_level[static_cast<size_t>(j)])
        ++containers_.at(id).load;
    }

    const int qid = q.id;
    queries_.emplace(qid, std::move(q));
    push({ev.t, next_seq_++, EventKind::kRelease, qid, 0});
  }

  std::vector<ContainerState> container_states() const {
    std::vector<ContainerState> states;
    states.reserve(containers_.size());
    for (const auto& [id, c] : containers_)
      states.push_back({id, c.level, c.load, c.lease_end, c.pending_delete});
    return states;
  }

  void on_release(const Event& ev) {
    const auto it = queries_.find(ev.a);
    if (it == queries_.end()) return;
    Query& q = it->second;
    const TreePlanProfile& plan = plan_of(q.class_index);
    const int j = ev.b;
    const Seconds dur = plan.op_cpu[static_cast<size_t>(j)];
    for (int id : q.assignment.per_level[static_cast<size_t>(j)]) {
      Container& c = containers_.at(id);
      c.fifo.push_back({q.id, j, dur});
      pump(c, ev.t);
    }
  }

  void pump(Container& c, Seconds now) {
    while (c.running < cfg_.capacity && !c.fifo.empty()) {
      const QueuedOp op = c.fifo.front();
      c.fifo.pop_front();
      ++c.running;
      result_.max_concurrent_ops = std::max(result_.max_concurrent_ops, c.running);
      push({now + op.duration, next_seq_++, EventKind::kFinish, c.id, op.query,
            op.plan_level});
    }
  }

  Seconds transfer_delay(const TreePlanProfile& plan, int from_level) const {
    const Bytes bytes = plan.level_out_bytes(from_level);
    if (bytes <= 0.0) return 0.0;
    const int a = rank_level(from_level, plan.height(), target_.height());
    const int b = rank_level(from_level + 1, plan.height(), target_.height());
    const double throughput =
        cfg_.pricing.net_speed * std::min(target_[a], target_[b]);
    return bytes / throughput;
  }

  void on_finish(const Event& ev) {
    Container& c = containers_.at(ev.a);
    --c.running;
    --c.load;
    pump(c, ev.t);

    Query& q = queries_.at(ev.b);
    const TreePlanProfile& plan = plan_of(q.class_index);
    const int j = ev.c;
    const int height = plan.height();
    --q.remaining[static_cast<size_t>(j)];

    if (q.remaining[static_cast<size_t>(j)] == 0) {
      if (j == height - 1) {
        complete_query(q, ev.t);
      } else if (j + 1 == height - 1) {
        // The root consumes only its own query's partials.
        push({ev.t + transfer_delay(plan, j), next_seq_++, EventKind::kRelease,
              q.id, j + 1});
      }
    }

    Cohort& cohort = cohorts_[static_cast<size_t>(q.cohort)];
    if (--cohort.outstanding[static_cast<size_t>(j)] == 0) {
      // The cohort drained this level: release the members' next interior
      // level together.
      for (int member : cohort.members) {
        const auto mit = queries_.find(member);
        if (mit == queries_.end()) continue;
        const TreePlanProfile& mplan = plan_of(mit->second.class_index);
        if (j + 1 < mplan.height() - 1)
          push({ev.t + transfer_delay(mplan, j), next_seq_++, EventKind::kRelease,
                member, j + 1});
      }
    }
  }

  void complete_query(Query& q, Seconds now) {
    const QueryClass& cls = cfg_.classes[static_cast<size_t>(q.class_index)];
    const Money price = sla_price(cls.sla, now - q.arrival);
    result_.queries.push_back({q.id, q.class_index, q.arrival, now, price});
    result_.total_revenue += price;
    accum_.revenue += price;
    accum_.exec_sum += now - q.arrival;
    ++accum_.completed;
    window_.push_back({q.class_index, q.arrival, now});
    queries_.erase(q.id);
  }

  // --- state ---------------------------------------------------------------

  const SimConfig& cfg_;
  PartitionRing ring_;
  SimResult result_;

  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  uint64_t next_seq_ = 0;
  bool done_ = false;

  std::vector<ArrivalSpec> arrival_list_;
  std::map<int, Container> containers_;
  int next_container_id_ = 0;
  ContainerLayout target_;

  std::map<int, Query> queries_;
  int next_query_id_ = 0;
  std::vector<Cohort> cohorts_;
  Seconds last_arrival_time_ = -1.0;

  std::deque<CompletedQuery> window_;
  EpochAccum accum_;
};

}  // namespace

SimResult run(const SimConfig& config) {
  config.validate();
  Engine engine(config);
  return engine.run();
}

}  // namespace elastree
