// SPDX-License-Identifier: Apache-2.0
//
// Maps a query's tree operators onto containers: the operator's rank picks
// the layout level, and a load-ordered round robin balances within a level.

#pragma once

#include <string>
#include <vector>

#include "elastree/model.hpp"

namespace elastree {

struct ContainerState {
  int id = 0;
  int level = 0;
  int load = 0;             // running + queued operators
  Seconds lease_end = 0.0;  // end of the current paid quantum
  bool pending_delete = false;
};

// Raised when a plan cannot be placed (missing level, plan taller than the
// layout).
struct SchedulingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Layout level for an operator at `plan_level` of a plan with `plan_height`
// levels, scheduled onto a layout with `layout_height` levels. Equal heights
// map identically; shorter plans are stretched with the leaf pinned to level
// 0 and the root to the top level. A single-level plan goes to level 0 (its
// only operator reads the data). Plans taller than the layout are invalid.
int rank_level(int plan_level, int plan_height, int layout_height);

// Per-level container choices for one plan: assignment.per_level[j][k] is the
// container id running the k-th operator of plan level j.
struct OperatorAssignment {
  int query_id = 0;
  std::vector<std::vector<int>> per_level;
};

// Distributes the plan's operators over the given containers. Within each
// level, candidates are ordered by (load, id) and operators dealt round
// robin, so two containers' shares differ by at most one and lighter-loaded
// containers fill first. Containers flagged pending_delete receive nothing.
// Does not mutate the container states; the caller owns load bookkeeping.
OperatorAssignment schedule(int query_id, const TreePlanProfile& plan,
                            int layout_height,
                            const std::vector<ContainerState>& containers);

}  // namespace elastree
