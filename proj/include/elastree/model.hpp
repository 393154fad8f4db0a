// SPDX-License-Identifier: Apache-2.0
//
// Shared domain types and the SLA/profit arithmetic used by every other
// module: SLA price curves, tree-plan profiles, container layouts, and
// per-quantum cloud pricing.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace elastree {

using Money = double;    // dollars
using Seconds = double;
using Bytes = double;

// Raised when a scenario/config is structurally invalid (CLI exit 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when layout bounds cannot be satisfied (CLI exit 3).
struct BoundsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an exact enumeration would exceed its cap (CLI exit 4).
struct EnumCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exponential price curve: price(t) = alpha * exp(-t / gamma).
// Small gamma = critical query (price decays fast), large gamma = best effort.
struct SlaSpec {
  double alpha = 0.0;  // dollars at t = 0
  double gamma = 0.0;  // decay constant, seconds

  void validate() const;
};

// Per-level aggregate view of a tree execution plan: how many operators run
// at each level, how long each takes, and how many bytes each emits upward.
// Level 0 holds the leaves, the last level the single root operator.
struct TreePlanProfile {
  std::vector<int> op_count;
  std::vector<Seconds> op_cpu;        // seconds per operator
  std::vector<Bytes> op_out_bytes;    // bytes emitted upward per operator

  int height() const { return static_cast<int>(op_count.size()); }
  Seconds level_cpu(int level) const {
    return op_count[static_cast<size_t>(level)] * op_cpu[static_cast<size_t>(level)];
  }
  Bytes level_out_bytes(int level) const {
    return op_count[static_cast<size_t>(level)] * op_out_bytes[static_cast<size_t>(level)];
  }

  void validate() const;
};

struct QueryClass {
  std::string id;
  SlaSpec sla;
  TreePlanProfile plan;

  void validate() const;
};

// Container counts per layout level; index 0 is the data level.
// This is the allocator's decision variable.
struct ContainerLayout {
  std::vector<int> levels;

  ContainerLayout() = default;
  explicit ContainerLayout(std::vector<int> counts) : levels(std::move(counts)) {}

  int height() const { return static_cast<int>(levels.size()); }
  int total() const;
  int& operator[](int i) { return levels[static_cast<size_t>(i)]; }
  int operator[](int i) const { return levels[static_cast<size_t>(i)]; }
  bool operator==(const ContainerLayout&) const = default;

  void validate() const;  // every entry >= 1
  std::string to_string() const;  // "10/4/1"
};

// Per-level inclusive min/max container counts.
struct LayoutBounds {
  std::vector<int> min;
  std::vector<int> max;

  int height() const { return static_cast<int>(min.size()); }
  void validate() const;
  bool contains(const ContainerLayout& l) const;
  ContainerLayout clamp(const ContainerLayout& l) const;
};

struct CloudPricing {
  Seconds quantum = 300.0;      // T_Q: minimum billing period
  Money quantum_cost = 0.41;    // dollars per container-quantum
  double net_speed = 18.75e6;   // bytes/second (150 Mbps)

  void validate() const;
};

// price(t) = alpha * exp(-t / gamma). Throws std::domain_error for t < 0.
Money sla_price(const SlaSpec& sla, Seconds t);

// Cost of keeping `layout` allocated for `period` seconds:
// quantum_cost * (period / quantum) * total containers.
Money operational_cost(const ContainerLayout& layout, Seconds period,
                       const CloudPricing& pricing);
Money operational_cost(double total_containers, Seconds period,
                       const CloudPricing& pricing);

inline Money profit(Money revenue, Money cost) { return revenue - cost; }

}  // namespace elastree
