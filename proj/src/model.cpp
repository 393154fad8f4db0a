// SPDX-License-Identifier: Apache-2.0

#include "elastree/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace elastree {

void SlaSpec::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("SlaSpec: alpha must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("SlaSpec: gamma must be > 0");
}

void TreePlanProfile::validate() const {
  const size_t h = op_count.size();
  if (h == 0) throw ConfigError("TreePlanProfile: plan needs at least one level");
  if (op_cpu.size() != h || op_out_bytes.size() != h)
    throw ConfigError("TreePlanProfile: op_cpu/op_out_bytes length must match op_count");
  if (op_count.back() != 1)
    throw ConfigError("TreePlanProfile: top level must hold exactly one operator");
  for (size_t i = 0; i < h; ++i) {
    if (op_count[i] < 1)
      throw ConfigError("TreePlanProfile: op_count entries must be >= 1");
    // Counts shrink (weakly) from leaves to root.
    if (i + 1 < h && op_count[i] < op_count[i + 1])
      throw ConfigError("TreePlanProfile: op_count must be non-increasing toward the root");
    if (op_cpu[i] < 0.0 || op_out_bytes[i] < 0.0)
      throw ConfigError("TreePlanProfile: costs must be >= 0");
  }
}

void QueryClass::validate() const {
  if (id.empty()) throw ConfigError("QueryClass: empty id");
  sla.validate();
  plan.validate();
}

int ContainerLayout::total() const {
  return std::accumulate(levels.begin(), levels.end(), 0);
}

void ContainerLayout::validate() const {
  if (levels.empty()) throw ConfigError("ContainerLayout: empty layout");
  for (int c : levels)
    if (c < 1) throw ConfigError("ContainerLayout: every level needs >= 1 container");
}

std::string ContainerLayout::to_string() const {
  std::ostringstream out;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (i) out << '/';
    out << levels[i];
  }
  return out.str();
}

void LayoutBounds::validate() const {
  if (min.empty() || min.size() != max.size())
    throw BoundsError("LayoutBounds: min/max must be non-empty and equal length");
  for (size_t i = 0; i < min.size(); ++i) {
    if (min[i] < 1) throw BoundsError("LayoutBounds: min must be >= 1 at every level");
    if (max[i] < min[i])
      throw BoundsError("LayoutBounds: max < min at level " + std::to_string(i));
  }
}

bool LayoutBounds::contains(const ContainerLayout& l) const {
  if (l.height() != height()) return false;
  for (int i = 0; i < height(); ++i)
    if (l[i] < min[static_cast<size_t>(i)] || l[i] > max[static_cast<size_t>(i)]) return false;
  return true;
}

ContainerLayout LayoutBounds::clamp(const ContainerLayout& l) const {
  ContainerLayout out = l;
  for (int i = 0; i < height() && i < l.height(); ++i) {
    const size_t u = static_cast<size_t>(i);
    if (out[i] < min[u]) out[i] = min[u];
    if (out[i] > max[u]) out[i] = max[u];
  }
  return out;
}

void CloudPricing::validate() const {
  if (!(quantum > 0.0)) throw ConfigError("CloudPricing: quantum must be > 0");
  if (!(quantum_cost > 0.0)) throw ConfigError("CloudPricing: quantum_cost must be > 0");
  if (!(net_speed > 0.0)) throw ConfigError("CloudPricing: net_speed must be > 0");
}

Money sla_price(const SlaSpec& sla, Seconds t) {
  if (t < 0.0) throw std::domain_error("sla_price: negative execution time");
  return sla.alpha * std::exp(-t / sla.gamma);
}

Money operational_cost(double total_containers, Seconds period,
                       const CloudPricing& pricing) {
  return pricing.quantum_cost * (period / pricing.quantum) * total_containers;
}

Money operational_cost(const ContainerLayout& layout, Seconds period,
                       const CloudPricing& pricing) {
  return operational_cost(static_cast<double>(layout.total()), period, pricing);
}

}  // namespace elastree
