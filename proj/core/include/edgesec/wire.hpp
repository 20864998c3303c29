#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "edgesec/policy.hpp"
#include "edgesec/result.hpp"
#include "edgesec/trust.hpp"

namespace edgesec {

struct SensorReport;  // gateway.hpp

namespace wire {

// Canonical big-endian layouts for everything a signature may cover.
// AnalysisRequest: box_id(4) request_id(4) src_addr(4) dst_addr(4)
// src_port(2) dst_port(2) protocol(1) device_id(2) flags(1) reserved(3).
inline constexpr std::size_t kAnalysisRequestSize = 27;
inline constexpr std::size_t kUplinkBudgetBytes = 40;
static_assert(kAnalysisRequestSize < kUplinkBudgetBytes);

// MatchPattern: presence mask(1) then all six fields fixed-width, zeros when
// wildcard. SecurityPolicy: policy_id(8) pattern(16) verdict(1) priority(1)
// issuer(1) issued_at(8).
inline constexpr std::size_t kMatchPatternSize = 16;
inline constexpr std::size_t kPolicySize = 35;

enum class WireError : std::uint8_t {
  WrongLength,
  Truncated,
  UnknownType,
  LengthMismatch,
  BadFieldValue,
};

std::array<std::uint8_t, kAnalysisRequestSize> encode_request(const AnalysisRequest& req);
Result<AnalysisRequest, WireError> decode_request(std::span<const std::uint8_t> bytes);

void encode_pattern(const MatchPattern& p, std::vector<std::uint8_t>& out);
void encode_policy(const SecurityPolicy& p, std::vector<std::uint8_t>& out);
Result<MatchPattern, WireError> decode_pattern(std::span<const std::uint8_t> bytes);
Result<SecurityPolicy, WireError> decode_policy(std::span<const std::uint8_t> bytes);

// Payload codecs for framed messages.
std::vector<std::uint8_t> encode_response_payload(const AnalysisResponse& resp);
Result<AnalysisResponse, WireError> decode_response_payload(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_update_payload(const PolicyUpdate& update);
Result<PolicyUpdate, WireError> decode_update_payload(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_report_payload(const SensorReport& report);
Result<SensorReport, WireError> decode_report_payload(std::span<const std::uint8_t> bytes);

/// Report of a source that sent frames failing signature verification.
struct RogueSourceReport {
  std::uint32_t box_id = 0;
  std::vector<std::pair<std::uint32_t, Tick>> sources;  // (addr, tick observed)

  bool operator==(const RogueSourceReport&) const = default;
};

std::vector<std::uint8_t> encode_rogue_payload(const RogueSourceReport& report);
Result<RogueSourceReport, WireError> decode_rogue_payload(std::span<const std::uint8_t> bytes);

enum class MessageType : std::uint8_t {
  AnalysisRequest = 1,
  AnalysisResponse = 2,
  PolicyUpdate = 3,
  SensorReport = 4,
  RogueSourceReport = 5,
};

/// Frame: length(4, bytes after this field) | type(1) | payload |
/// signer cert(108) | detached signature(64, over type + payload).
struct Frame {
  MessageType type{};
  std::vector<std::uint8_t> payload;
  trust::Certificate cert;
  trust::Signature sig{};
};

std::vector<std::uint8_t> seal_frame(MessageType type, std::span<const std::uint8_t> payload,
                                     const trust::Certificate& signer_cert,
                                     const trust::SecretKey& signer_key);

/// Structural decode only; signature checks are the receiver's job.
Result<Frame, WireError> open_frame(std::span<const std::uint8_t> bytes);

/// Signature over type + payload under the frame's own cert key.
bool frame_signature_ok(const Frame& frame);

}  // namespace wire
}  // namespace edgesec
