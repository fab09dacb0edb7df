#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace adbench::sim {

// Parameterized adversarial scenario instance, anchored at an arc-length
// position along the route and armed when the ego comes within the trigger
// distance.
struct ScenarioSpec {
  std::string template_name;
  double anchor_s = 0.0;
  double trigger_distance = 20.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

// Catalog template names, one or more per scenario subcategory:
// control loss, parking, traffic negotiation, obstacle avoidance, and
// braking / lane changing.
const std::vector<std::string>& scenario_catalog();

bool is_catalog_template(const std::string& name);

}  // namespace adbench::sim
