// SPDX-License-Identifier: Apache-2.0

#include "elastree/placement.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_set>

#include <json.hpp>

#include "elastree/rng.hpp"

namespace elastree {

namespace {

// Deduplicated assignment pairs (partition, container) encoded as one key.
uint64_t pair_key(int partition, int container) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(partition)) << 32) |
         static_cast<uint32_t>(container);
}

std::unordered_set<uint64_t> assignment_pairs(const std::vector<int>& slot_partition,
                                              const std::vector<int>& slot_owner) {
  std::unordered_set<uint64_t> pairs;
  pairs.reserve(slot_partition.size());
  for (size_t i = 0; i < slot_partition.size(); ++i)
    pairs.insert(pair_key(slot_partition[i], slot_owner[i]));
  return pairs;
}

}  // namespace

Bytes predicted_move_size(double x, double y, Bytes data_size) {
  // Positive reals are accepted so the layout optimizer can probe the
  // relaxed problem; zero or negative counts are meaningless.
  if (!(x > 0.0) || !(y > 0.0))
    throw std::domain_error("predicted_move_size: container counts must be positive");
  if (data_size < 0.0)
    throw std::domain_error("predicted_move_size: negative data size");
  const double ratio = std::min(x / y, y / x);
  return (1.0 - ratio) * data_size;
}

PartitionRing PartitionRing::build(int num_partitions, int replication,
                                   int containers, int arc, uint64_t seed) {
  if (num_partitions < 1) throw ConfigError("PartitionRing: need >= 1 partition");
  // Order partitions around the inner circle by a seeded hash.
  std::vector<int> order(static_cast<size_t>(num_partitions));
  for (int p = 0; p < num_partitions; ++p) order[static_cast<size_t>(p)] = p;
  std::sort(order.begin(), order.end(), [seed](int a, int b) {
    const uint64_t ha = mix64(seed ^ mix64(static_cast<uint64_t>(a) + 1));
    const uint64_t hb = mix64(seed ^ mix64(static_cast<uint64_t>(b) + 1));
    return ha != hb ? ha < hb : a < b;
  });
  PartitionRing ring = build_with_order(std::move(order), replication, containers, arc);
  ring.seed_ = seed;
  return ring;
}

PartitionRing PartitionRing::build_with_order(std::vector<int> partition_order,
                                              int replication, int containers,
                                              int arc) {
  if (partition_order.empty()) throw ConfigError("PartitionRing: need >= 1 partition");
  if (replication < 1) throw ConfigError("PartitionRing: replication must be >= 1");
  if (containers < 1) throw ConfigError("PartitionRing: need >= 1 container");
  if (arc < 1) throw ConfigError("PartitionRing: arc must be >= 1");

  PartitionRing ring;
  ring.num_partitions_ = static_cast<int>(partition_order.size());
  ring.replication_ = replication;
  ring.arc_ = arc;

  // Replicas of a partition occupy adjacent inner-circle slots.
  ring.slot_partition_.reserve(partition_order.size() * static_cast<size_t>(replication));
  for (int p : partition_order)
    for (int r = 0; r < replication; ++r) ring.slot_partition_.push_back(p);

  // One container owns everything, then grow one insertion at a time. The
  // local rebalancing keeps ownership even, so no separate bootstrap pass
  // is needed.
  ring.slot_owner_.assign(ring.slot_partition_.size(), 0);
  ring.order_ = {0};
  ring.next_id_ = 1;
  while (ring.container_count() < containers) ring.insert_one();
  return ring;
}

int PartitionRing::dedup_load(int container) const {
  std::vector<int> parts;
  for (size_t i = 0; i < slot_owner_.size(); ++i)
    if (slot_owner_[i] == container) parts.push_back(slot_partition_[i]);
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  return static_cast<int>(parts.size());
}

std::map<int, int> PartitionRing::all_dedup_loads() const {
  // One sweep over the slots instead of a scan per container.
  std::vector<uint64_t> pairs;
  pairs.reserve(slot_owner_.size());
  for (size_t i = 0; i < slot_owner_.size(); ++i)
    pairs.push_back(pair_key(slot_partition_[i], slot_owner_[i]));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::map<int, int> loads;
  for (int id : order_) loads[id] = 0;
  for (uint64_t key : pairs) ++loads[static_cast<int>(key & 0xffffffffULL)];
  return loads;
}

std::vector<size_t> PartitionRing::window_positions(size_t center_pos,
                                                    size_t want) const {
  const size_t n = order_.size();
  want = std::min(want, n);
  // Extend alternately left/right of the center so the window is a
  // contiguous run on the outer circle.
  size_t left = center_pos, right = center_pos, taken = 1;
  bool take_left = true;
  while (taken < want) {
    if (take_left) {
      left = (left + n - 1) % n;
    } else {
      right = (right + 1) % n;
    }
    take_left = !take_left;
    ++taken;
  }
  std::vector<size_t> run;
  run.reserve(want);
  for (size_t i = 0, p = left; i < want; ++i, p = (p + 1) % n) run.push_back(p);
  return run;
}

void PartitionRing::rebalance_window(size_t center_pos,
                                     const std::map<int, int>& loads) {
  const std::vector<size_t> window =
      window_positions(center_pos, static_cast<size_t>(arc_) + 1);
  std::vector<int> members;
  members.reserve(window.size());
  for (size_t pos : window) members.push_back(order_[pos]);

  // Slots currently held by each window member, ascending slot index.
  std::vector<std::vector<int>> held(members.size());
  for (size_t s = 0; s < slot_owner_.size(); ++s)
    for (size_t m = 0; m < members.size(); ++m)
      if (slot_owner_[s] == members[m]) {
        held[m].push_back(static_cast<int>(s));
        break;
      }

  size_t pool = 0;
  for (const auto& h : held) pool += h.size();
  const size_t k = members.size();
  const size_t base = pool / k;
  size_t rem = pool % k;

  // Even split; the +1 remainders go to the largest prior owners (ties by
  // lower id), which moves the fewest slots.
  const auto load_of = [&](int id) {
    const auto it = loads.find(id);
    return it == loads.end() ? 0 : it->second;
  };
  std::vector<size_t> by_load(k);
  for (size_t i = 0; i < k; ++i) by_load[i] = i;
  std::sort(by_load.begin(), by_load.end(), [&](size_t a, size_t b) {
    const int la = load_of(members[a]), lb = load_of(members[b]);
    if (la != lb) return la > lb;
    return members[a] < members[b];
  });
  std::vector<size_t> target(k, base);
  for (size_t i = 0; i < k && rem > 0; ++i, --rem) ++target[by_load[i]];

  // Members over target release their highest-indexed slots; members under
  // target take contiguous chunks of the released pool in circle-run order.
  std::vector<int> released;
  for (size_t m = 0; m < k; ++m) {
    while (held[m].size() > target[m]) {
      released.push_back(held[m].back());
      held[m].pop_back();
    }
  }
  std::sort(released.begin(), released.end());
  size_t cursor = 0;
  for (size_t m = 0; m < k; ++m) {
    while (held[m].size() < target[m]) {
      const int slot = released[cursor++];
      slot_owner_[static_cast<size_t>(slot)] = members[m];
      held[m].push_back(slot);
    }
  }
}

void PartitionRing::insert_one() {
  const std::map<int, int> loads = all_dedup_loads();
  // Anchor: the container holding the most distinct partitions.
  size_t anchor_pos = 0;
  int best_load = -1;
  for (size_t pos = 0; pos < order_.size(); ++pos) {
    const int load = loads.at(order_[pos]);
    if (load > best_load || (load == best_load && order_[pos] < order_[anchor_pos])) {
      best_load = load;
      anchor_pos = pos;
    }
  }
  const int id = next_id_++;
  order_.insert(order_.begin() + static_cast<long>(anchor_pos) + 1, id);
  rebalance_window(anchor_pos + 1, loads);
}

void PartitionRing::remove_one() {
  const std::map<int, int> loads = all_dedup_loads();
  // Inverse of insertion: drop the container holding the fewest distinct
  // partitions.
  size_t victim_pos = 0;
  int best_load = -1;
  for (size_t pos = 0; pos < order_.size(); ++pos) {
    const int load = loads.at(order_[pos]);
    if (best_load < 0 || load < best_load ||
        (load == best_load && order_[pos] < order_[victim_pos])) {
      best_load = load;
      victim_pos = pos;
    }
  }
  const int victim = order_[victim_pos];

  const std::vector<size_t> window =
      window_positions(victim_pos, std::min<size_t>(static_cast<size_t>(arc_) + 1,
                                                    order_.size()));
  std::vector<int> neighbors;
  for (size_t pos : window)
    if (order_[pos] != victim) neighbors.push_back(order_[pos]);

  std::vector<int> dead_slots;
  for (size_t s = 0; s < slot_owner_.size(); ++s)
    if (slot_owner_[s] == victim) dead_slots.push_back(static_cast<int>(s));

  order_.erase(order_.begin() + static_cast<long>(victim_pos));
  if (neighbors.empty()) {
    // Removing the last container is rejected upstream; nothing to hand out.
    return;
  }

  // Hand the dead container's slots out evenly, most-loaded neighbor last.
  const size_t k = neighbors.size();
  const size_t base = dead_slots.size() / k;
  size_t rem = dead_slots.size() % k;
  std::vector<size_t> by_load(k);
  for (size_t i = 0; i < k; ++i) by_load[i] = i;
  std::sort(by_load.begin(), by_load.end(), [&](size_t a, size_t b) {
    const int la = loads.at(neighbors[a]), lb = loads.at(neighbors[b]);
    if (la != lb) return la < lb;
    return neighbors[a] < neighbors[b];
  });
  std::vector<size_t> share(k, base);
  for (size_t i = 0; i < k && rem > 0; ++i, --rem) ++share[by_load[i]];

  size_t cursor = 0;
  for (size_t m = 0; m < k; ++m)
    for (size_t i = 0; i < share[m]; ++i)
      slot_owner_[static_cast<size_t>(dead_slots[cursor++])] = neighbors[m];
}

std::pair<PartitionRing, MoveReport> PartitionRing::resized(int new_count,
                                                            Bytes data_size) const {
  if (new_count < 1) throw std::domain_error("PartitionRing::resized: need >= 1 container");
  PartitionRing next = *this;
  while (next.container_count() < new_count) next.insert_one();
  while (next.container_count() > new_count) next.remove_one();

  const auto before = assignment_pairs(slot_partition_, slot_owner_);
  const auto after = assignment_pairs(next.slot_partition_, next.slot_owner_);
  MoveReport report;
  for (uint64_t key : after)
    if (!before.count(key)) ++report.moved_partitions;
  report.moved_fraction =
      after.empty() ? 0.0
                    : static_cast<double>(report.moved_partitions) /
                          static_cast<double>(after.size());
  const double slot_count = static_cast<double>(slot_partition_.size());
  report.bytes_to_fetch =
      static_cast<double>(report.moved_partitions) * (data_size / slot_count);
  return {std::move(next), report};
}

std::map<int, std::set<int>> PartitionRing::ownership() const {
  std::map<int, std::set<int>> owned;
  for (int id : order_) owned[id];  // containers with zero partitions still appear
  for (size_t s = 0; s < slot_owner_.size(); ++s)
    owned[slot_owner_[s]].insert(slot_partition_[s]);
  return owned;
}

std::string PartitionRing::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["num_partitions"] = num_partitions_;
  j["replication"] = replication_;
  j["arc"] = arc_;
  j["seed"] = seed_;
  j["next_id"] = next_id_;
  j["slot_partition"] = slot_partition_;
  j["slot_owner"] = slot_owner_;
  j["container_order"] = order_;
  return j.dump(2);
}

PartitionRing PartitionRing::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  PartitionRing ring;
  ring.num_partitions_ = j.at("num_partitions").get<int>();
  ring.replication_ = j.at("replication").get<int>();
  ring.arc_ = j.at("arc").get<int>();
  ring.seed_ = j.at("seed").get<uint64_t>();
  ring.next_id_ = j.at("next_id").get<int>();
  ring.slot_partition_ = j.at("slot_partition").get<std::vector<int>>();
  ring.slot_owner_ = j.at("slot_owner").get<std::vector<int>>();
  ring.order_ = j.at("container_order").get<std::vector<int>>();
  if (ring.slot_partition_.size() != ring.slot_owner_.size() || ring.order_.empty())
    throw ConfigError("PartitionRing::from_json: inconsistent ring state");
  return ring;
}

}  // namespace elastree
