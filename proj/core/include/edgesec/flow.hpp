#pragma once

#include <cstdint>
#include <functional>

namespace edgesec {

/// Simulation time in integer ticks.
using Tick = std::uint64_t;

enum class Verdict : std::uint8_t {
  Drop = 0,
  Allow = 1,
};

/// Which side initiated the connection, as seen from the gateway's LAN port.
enum class FlowDirection : std::uint8_t {
  Inbound = 0,
  Outbound = 1,
};

/// The 6-tuple identity of a connection attempt: the unit of policy matching
/// and of cloud analysis requests. device_id is the gateway-local identifier
/// of the LAN endpoint involved in the flow.
struct FlowMetadata {
  std::uint32_t src_addr = 0;
  std::uint32_t dst_addr = 0;
  std::uint16_t src_port = 0;  // 0 only for portless protocols (e.g. ICMP)
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;  // IANA protocol number
  std::uint16_t device_id = 0;

  bool operator==(const FlowMetadata&) const = default;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowMetadata& f) const {
    std::size_t h = 2166136261u;
    auto mix = [&h](std::uint32_t v) { h = (h ^ v) * 16777619u; };
    mix(f.src_addr);
    mix(f.dst_addr);
    mix(static_cast<std::uint32_t>(f.src_port) << 16 | f.dst_port);
    mix(static_cast<std::uint32_t>(f.protocol) << 16 | f.device_id);
    return h;
  }
};

inline const char* to_string(Verdict v) { return v == Verdict::Allow ? "allow" : "drop"; }

}  // namespace edgesec
