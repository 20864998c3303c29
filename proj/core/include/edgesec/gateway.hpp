#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "edgesec/policy.hpp"
#include "edgesec/policy_db.hpp"
#include "edgesec/result.hpp"
#include "edgesec/trust.hpp"
#include "edgesec/wire.hpp"

namespace edgesec {

enum class GatewayEventKind : std::uint8_t {
  FlowAllowed,
  FlowDropped,
  CloudRequested,
  UpdateApplied,
  UpdateRejected,
  SuspiciousSource,
};

struct GatewayEvent {
  Tick tick = 0;
  GatewayEventKind kind{};
  std::optional<FlowMetadata> flow;
  std::optional<FlowDirection> direction;
  std::uint32_t source_addr = 0;  // SuspiciousSource only
};

struct DeviceStats {
  std::uint32_t flows = 0;
  std::uint32_t drops = 0;
  std::uint32_t distinct_remotes = 0;

  bool operator==(const DeviceStats&) const = default;
};

/// Aggregation of the event log over a tick window, shipped to the cloud.
struct SensorReport {
  std::uint32_t box_id = 0;
  Tick window_start = 0;
  Tick window_end = 0;  // inclusive
  std::map<std::uint16_t, DeviceStats> devices;
  std::vector<std::pair<std::uint32_t, Tick>> suspicious_sources;

  bool operator==(const SensorReport&) const = default;
};

struct GatewayConfig {
  std::uint32_t box_id = 0;
  std::uint32_t css_id = 0;
  Verdict default_inbound = Verdict::Drop;    // fail closed against inbound
  Verdict default_outbound = Verdict::Allow;  // fail open for user traffic
  Tick pending_timeout = 2;                   // ticks a parked flow waits for the cloud
};

/// A flow parked while the cloud analyzes it; the returned request has
/// already been framed and queued on the cloud link.
struct CloudPending {
  AnalysisRequest request;
};

using FlowDecision = std::variant<Verdict, CloudPending>;

/// A parked flow resolved by a cloud response or by timeout fallback.
struct ResolvedFlow {
  std::uint32_t request_id = 0;
  FlowMetadata flow;
  FlowDirection direction{};
  Verdict verdict{};
  bool via_timeout = false;
};

enum class ResponseError : std::uint8_t {
  MalformedFrame,
  BadSignature,
  UnknownRequestId,
};

enum class UpdateError : std::uint8_t {
  MalformedFrame,
  BadSignature,
};

/// The edge gateway: enforces cached policies on new flows, asks the cloud on
/// misses, falls back to direction defaults offline, verifies every signed
/// artifact it receives, and reports sensor statistics. A single logical
/// event loop: callers serialize all mutating calls in tick order. All egress
/// goes to the cloud endpoint; gateways never address each other.
class Gateway {
 public:
  Gateway(GatewayConfig config, trust::KeyPair keys, trust::Certificate cert,
          trust::PublicKey ca_root);

  /// New-flow processing: cached policy verdict, or park + ask the cloud,
  /// or the direction default when the cloud link is down.
  FlowDecision process_flow(const FlowMetadata& flow, FlowDirection direction, Tick now);

  /// Framed AnalysisResponse from the cloud. On success the policy is cached
  /// and the parked flow released with its verdict.
  Result<ResolvedFlow, ResponseError> on_response(std::span<const std::uint8_t> frame, Tick now,
                                                  std::uint32_t source_addr);

  /// Framed PolicyUpdate. Foreign-key or malformed frames are rejected,
  /// logged as suspicious, and reported back to the cloud.
  Result<PolicyDb::ApplyResult, UpdateError> receive_update(std::span<const std::uint8_t> frame,
                                                            Tick now, std::uint32_t source_addr);

  /// Locally configured policy; outranks everything the cloud issues.
  SecurityPolicy add_manual_policy(const MatchPattern& pattern, Verdict verdict, Tick now);

  /// Expire parked flows older than the timeout; each falls back to its
  /// direction default. The implicit verdict is not cached.
  std::vector<ResolvedFlow> expire_pending(Tick now);

  /// 100 * (1 - drops/flows) for the device over [start, end]; 100 with no flows.
  double security_rank(std::uint16_t device_id, Tick window_start, Tick window_end) const;

  /// Aggregate the event log over [start, end] and queue the framed report
  /// on the cloud link.
  SensorReport emit_sensor_report(Tick window_start, Tick window_end);

  void set_css_link(bool connected) { css_connected_ = connected; }
  bool css_link_connected() const { return css_connected_; }

  std::vector<std::vector<std::uint8_t>> take_outbox() { return std::exchange(outbox_, {}); }
  std::size_t outbox_size() const { return outbox_.size(); }

  const std::vector<GatewayEvent>& event_log() const { return events_; }
  PolicyDb& db() { return db_; }
  const PolicyDb& db() const { return db_; }
  std::uint32_t box_id() const { return config_.box_id; }
  std::size_t pending_count() const { return pending_.size(); }

 private:
  struct Parked {
    FlowMetadata flow;
    FlowDirection direction{};
    Tick asked_at = 0;
  };

  Verdict direction_default(FlowDirection d) const {
    return d == FlowDirection::Inbound ? config_.default_inbound : config_.default_outbound;
  }
  void log_verdict(const FlowMetadata& flow, FlowDirection direction, Verdict v, Tick now);
  bool frame_trusted(const wire::Frame& frame);
  void note_suspicious(std::uint32_t source_addr, Tick now);
  void queue_frame(wire::MessageType type, std::span<const std::uint8_t> payload);

  GatewayConfig config_;
  trust::KeyPair keys_;
  trust::Certificate cert_;
  trust::PublicKey ca_root_;
  PolicyDb db_;
  bool css_connected_ = true;
  std::uint32_t next_request_id_ = 1;
  std::uint64_t next_manual_policy_id_ = 1;
  std::map<std::uint32_t, Parked> pending_;
  std::vector<GatewayEvent> events_;
  std::vector<std::pair<std::uint32_t, Tick>> unreported_suspicious_;
  std::vector<std::vector<std::uint8_t>> outbox_;
  bool css_cert_verified_ = false;
  trust::Certificate known_css_cert_;
};

}  // namespace edgesec
