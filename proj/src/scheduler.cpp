// SPDX-License-Identifier: Apache-2.0

#include "elastree/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace elastree {

int rank_level(int plan_level, int plan_height, int layout_height) {
  if (plan_height < 1 || plan_level < 0 || plan_level >= plan_height)
    throw SchedulingError("rank_level: operator level outside its plan");
  if (plan_height > layout_height)
    throw SchedulingError("rank_level: plan taller than the layout");
  if (plan_height == layout_height) return plan_level;
  if (plan_height == 1) return 0;
  // Stretch proportionally; leaf and root pins fall out of the formula.
  const double scaled = static_cast<double>(plan_level) *
                        static_cast<double>(layout_height - 1) /
                        static_cast<double>(plan_height - 1);
  return static_cast<int>(std::lround(scaled));
}

OperatorAssignment schedule(int query_id, const TreePlanProfile& plan,
                            int layout_height,
                            const std::vector<ContainerState>& containers) {
  OperatorAssignment assignment;
  assignment.query_id = query_id;
  assignment.per_level.resize(static_cast<size_t>(plan.height()));

  for (int j = 0; j < plan.height(); ++j) {
    const int level = rank_level(j, plan.height(), layout_height);

    std::vector<const ContainerState*> candidates;
    for (const ContainerState& c : containers)
      if (c.level == level && !c.pending_delete) candidates.push_back(&c);
    if (candidates.empty())
      throw SchedulingError("schedule: no available container at layout level " +
                            std::to_string(level));
    std::sort(candidates.begin(), candidates.end(),
              [](const ContainerState* a, const ContainerState* b) {
                if (a->load != b->load) return a->load < b->load;
                return a->id < b->id;
              });

    auto& chosen = assignment.per_level[static_cast<size_t>(j)];
    const int ops = plan.op_count[static_cast<size_t>(j)];
    chosen.reserve(static_cast<size_t>(ops));
    for (int k = 0; k < ops; ++k)
      chosen.push_back(candidates[static_cast<size_t>(k) % candidates.size()]->id);
  }
  return assignment;
}

}  // namespace elastree
