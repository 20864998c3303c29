#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "edgesec/flow.hpp"

namespace edgesec {

/// Manual (user-entered) policies outrank everything the cloud issues.
enum class Priority : std::uint8_t {
  Normal = 1,
  High = 2,
  Manual = 3,
};

enum class Issuer : std::uint8_t {
  Css = 0,
  LocalUser = 1,
};

/// Wildcardable match over the 6-tuple. A disengaged field matches anything.
/// Negative/complement constraints are deliberately not expressible; "all but
/// these" is written as specific Allow policies over a general Drop.
struct MatchPattern {
  std::optional<std::uint32_t> src_addr;
  std::optional<std::uint32_t> dst_addr;
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;
  std::optional<std::uint8_t> protocol;
  std::optional<std::uint16_t> device_id;

  bool operator==(const MatchPattern&) const = default;

  /// Number of concrete (non-wildcard) fields, 0..6.
  int specificity() const {
    return int(src_addr.has_value()) + int(dst_addr.has_value()) + int(src_port.has_value()) +
           int(dst_port.has_value()) + int(protocol.has_value()) + int(device_id.has_value());
  }

  bool is_exact() const { return specificity() == 6; }

  static MatchPattern exact(const FlowMetadata& f) {
    return MatchPattern{f.src_addr, f.dst_addr, f.src_port, f.dst_port, f.protocol, f.device_id};
  }
};

/// True iff every concrete constraint equals the corresponding flow field.
bool matches(const MatchPattern& pattern, const FlowMetadata& flow);

struct SecurityPolicy {
  std::uint64_t policy_id = 0;  // unique within one issuer's stream
  MatchPattern pattern;
  Verdict verdict = Verdict::Drop;
  Priority priority = Priority::Normal;
  Issuer issuer = Issuer::Css;
  Tick issued_at = 0;

  bool operator==(const SecurityPolicy&) const = default;
};

/// Strict total order used to pick a winner among matching policies:
/// priority, then specificity, then recency, then policy_id. Returns true when
/// `a` ranks below `b` (b wins). policy_id breaks every remaining tie because
/// equal priority implies equal issuer, and ids are unique per issuer.
bool ranks_below(const SecurityPolicy& a, const SecurityPolicy& b);

enum class UpdateTier : std::uint8_t {
  High = 1,     // pushed immediately, every tick
  Bundled = 2,  // deferred to low-activity windows
};

/// A sequence-numbered delta batch of policies from the cloud to one gateway.
/// seq is monotonic per destination box; a batch carries only policies that
/// box has not been sent before.
struct PolicyUpdate {
  std::uint64_t seq = 0;
  UpdateTier tier = UpdateTier::Bundled;
  std::vector<SecurityPolicy> policies;

  bool operator==(const PolicyUpdate&) const = default;
};

/// Per-box monotonic analysis request; the canonical encoding is exactly
/// wire::kAnalysisRequestSize bytes. flags/reserved are zero today and exist
/// so the layout can version without growing.
struct AnalysisRequest {
  std::uint32_t box_id = 0;
  std::uint32_t request_id = 0;
  FlowMetadata metadata;
  std::uint8_t flags = 0;
  std::array<std::uint8_t, 3> reserved{};

  bool operator==(const AnalysisRequest&) const = default;
};

struct AnalysisResponse {
  std::uint32_t request_id = 0;
  SecurityPolicy policy;  // pattern matches the metadata of the request it answers

  bool operator==(const AnalysisResponse&) const = default;
};

}  // namespace edgesec
