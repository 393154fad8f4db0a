// SPDX-License-Identifier: Apache-2.0
//
// Consistent-hash placement of table partitions onto data-level containers,
// with over-partitioning, replication, and Arc-window local rebalancing.
//
// The inner circle is a fixed sequence of partition-replica slots: a seeded
// hash orders the partitions around the circle and each partition occupies
// `replication` adjacent slots. Containers sit on the outer circle; adding a
// container places it next to the currently most-loaded one and rebalances
// slots only among the Arc+1 containers around the insertion point, so
// re-organization stays local. Removal is the inverse: the least-loaded
// container is dropped and its slots handed to its Arc-window neighbors.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "elastree/model.hpp"

namespace elastree {

// Summary of the data movement caused by a resize: how many deduplicated
// (partition, container) assignments are new, what fraction of the final
// assignment set that is, and the bytes those fetches represent.
struct MoveReport {
  long moved_partitions = 0;
  double moved_fraction = 0.0;
  Bytes bytes_to_fetch = 0.0;
};

class PartitionRing {
 public:
  // Normal construction: the inner-circle partition order comes from a
  // seeded 64-bit hash. Deterministic for a fixed seed.
  static PartitionRing build(int num_partitions, int replication, int containers,
                             int arc, uint64_t seed);

  // Test hook: place partitions around the inner circle in the given order
  // (e.g. the identity permutation) instead of hashing.
  static PartitionRing build_with_order(std::vector<int> partition_order,
                                        int replication, int containers, int arc);

  // Grows or shrinks one container at a time until `new_count` is reached.
  // `data_size` is the total stored volume (partitioning and replication
  // included) used to price the report's bytes_to_fetch.
  std::pair<PartitionRing, MoveReport> resized(int new_count,
                                               Bytes data_size = 0.0) const;

  // Deduplicated view: container id -> set of partitions it stores.
  std::map<int, std::set<int>> ownership() const;

  int container_count() const { return static_cast<int>(order_.size()); }
  int num_partitions() const { return num_partitions_; }
  int replication() const { return replication_; }
  int arc() const { return arc_; }
  uint64_t seed() const { return seed_; }

  // Container ids in outer-circle order.
  const std::vector<int>& circle_order() const { return order_; }
  // slot -> owning container id; slots_partition()[i] is the partition there.
  const std::vector<int>& slot_owner() const { return slot_owner_; }
  const std::vector<int>& slot_partition() const { return slot_partition_; }

  // Structured-text round trip (schema documented in the README).
  std::string to_json() const;
  static PartitionRing from_json(const std::string& text);

 private:
  PartitionRing() = default;

  void insert_one();
  void remove_one();
  void rebalance_window(size_t center_pos, const std::map<int, int>& loads);
  int dedup_load(int container) const;
  std::map<int, int> all_dedup_loads() const;
  std::vector<size_t> window_positions(size_t center_pos, size_t want) const;

  int num_partitions_ = 0;
  int replication_ = 0;
  int arc_ = 4;
  uint64_t seed_ = 0;
  int next_id_ = 0;
  std::vector<int> slot_partition_;  // inner circle, fixed after build
  std::vector<int> slot_owner_;      // slot -> container id
  std::vector<int> order_;           // outer circle order of container ids
};

// Analytical data-movement model: size_d(x, y) = (1 - min(x/y, y/x)) * data_size.
// Symmetric, zero exactly on the diagonal. Throws std::domain_error if a
// count is < 1.
Bytes predicted_move_size(double x, double y, Bytes data_size);

}  // namespace elastree
