#include "adbench/sim/scenario.hpp"

#include <algorithm>

namespace adbench::sim {

const std::vector<std::string>& scenario_catalog() {
  static const std::vector<std::string> catalog = {
      "ControlLoss",
      "ParkingExit",
      "SignalizedJunctionLeftTurn",
      "OppositeVehicleRunningRedLight",
      "ConstructionObstacle",
      "ParkedObstacleTwoWays",
      "HazardAtSideLane",
      "VehicleOpensDoorTwoWays",
      "DynamicObjectCrossing",
      "VehicleTurningRoutePedestrian",
  };
  return catalog;
}

bool is_catalog_template(const std::string& name) {
  const auto& catalog = scenario_catalog();
  return std::find(catalog.begin(), catalog.end(), name) != catalog.end();
}

}  // namespace adbench::sim
