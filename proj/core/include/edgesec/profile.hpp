#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace edgesec {

using TrafficClass = std::string;
using InstanceId = std::uint32_t;

/// Ordered middlebox instances a traffic class is analyzed by.
using ServiceChain = std::vector<InstanceId>;

/// Per-subscriber analysis preferences held at the cloud.
struct UserProfile {
  std::uint32_t box_id = 0;
  std::map<std::uint16_t, TrafficClass> class_map;  // device -> traffic class
  std::map<TrafficClass, ServiceChain> chains;
  bool share_data = true;            // opt-out excludes this box from cross-network analytics
  bool full_session_routing = false;  // evaluate every chain stage, no short-circuit

  /// Every device maps to a class that has a non-empty chain.
  bool valid() const {
    if (chains.empty()) return false;
    for (const auto& [klass, chain] : chains)
      if (chain.empty()) return false;
    for (const auto& [device, klass] : class_map)
      if (chains.find(klass) == chains.end()) return false;
    return true;
  }
};

}  // namespace edgesec
