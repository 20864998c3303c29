#include "edgesec/wire.hpp"

#include <algorithm>

#include "edgesec/bytes.hpp"
#include "edgesec/gateway.hpp"

namespace edgesec::wire {

namespace {

constexpr std::uint8_t kMaskSrcAddr = 1 << 0;
constexpr std::uint8_t kMaskDstAddr = 1 << 1;
constexpr std::uint8_t kMaskSrcPort = 1 << 2;
constexpr std::uint8_t kMaskDstPort = 1 << 3;
constexpr std::uint8_t kMaskProtocol = 1 << 4;
constexpr std::uint8_t kMaskDeviceId = 1 << 5;

constexpr std::size_t kSignatureBlockSize = trust::kCertificateSize + trust::kSignatureSize;

}  // namespace

std::array<std::uint8_t, kAnalysisRequestSize> encode_request(const AnalysisRequest& req) {
  std::vector<std::uint8_t> buf;
  buf.reserve(kAnalysisRequestSize);
  ByteWriter w(buf);
  w.u32(req.box_id);
  w.u32(req.request_id);
  w.u32(req.metadata.src_addr);
  w.u32(req.metadata.dst_addr);
  w.u16(req.metadata.src_port);
  w.u16(req.metadata.dst_port);
  w.u8(req.metadata.protocol);
  w.u16(req.metadata.device_id);
  w.u8(req.flags);
  w.bytes(req.reserved);
  std::array<std::uint8_t, kAnalysisRequestSize> out{};
  std::copy(buf.begin(), buf.end(), out.begin());
  return out;
}

Result<AnalysisRequest, WireError> decode_request(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kAnalysisRequestSize) return WireError::WrongLength;
  ByteReader r(bytes);
  AnalysisRequest req;
  req.box_id = r.u32();
  req.request_id = r.u32();
  req.metadata.src_addr = r.u32();
  req.metadata.dst_addr = r.u32();
  req.metadata.src_port = r.u16();
  req.metadata.dst_port = r.u16();
  req.metadata.protocol = r.u8();
  req.metadata.device_id = r.u16();
  req.flags = r.u8();
  auto rsv = r.bytes(3);
  std::copy(rsv.begin(), rsv.end(), req.reserved.begin());
  return req;
}

void encode_pattern(const MatchPattern& p, std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  std::uint8_t mask = 0;
  if (p.src_addr) mask |= kMaskSrcAddr;
  if (p.dst_addr) mask |= kMaskDstAddr;
  if (p.src_port) mask |= kMaskSrcPort;
  if (p.dst_port) mask |= kMaskDstPort;
  if (p.protocol) mask |= kMaskProtocol;
  if (p.device_id) mask |= kMaskDeviceId;
  w.u8(mask);
  w.u32(p.src_addr.value_or(0));
  w.u32(p.dst_addr.value_or(0));
  w.u16(p.src_port.value_or(0));
  w.u16(p.dst_port.value_or(0));
  w.u8(p.protocol.value_or(0));
  w.u16(p.device_id.value_or(0));
}

Result<MatchPattern, WireError> decode_pattern(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kMatchPatternSize) return WireError::WrongLength;
  ByteReader r(bytes);
  std::uint8_t mask = r.u8();
  std::uint32_t src_addr = r.u32();
  std::uint32_t dst_addr = r.u32();
  std::uint16_t src_port = r.u16();
  std::uint16_t dst_port = r.u16();
  std::uint8_t protocol = r.u8();
  std::uint16_t device_id = r.u16();
  MatchPattern p;
  if (mask & kMaskSrcAddr) p.src_addr = src_addr;
  if (mask & kMaskDstAddr) p.dst_addr = dst_addr;
  if (mask & kMaskSrcPort) p.src_port = src_port;
  if (mask & kMaskDstPort) p.dst_port = dst_port;
  if (mask & kMaskProtocol) p.protocol = protocol;
  if (mask & kMaskDeviceId) p.device_id = device_id;
  return p;
}

void encode_policy(const SecurityPolicy& p, std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.u64(p.policy_id);
  encode_pattern(p.pattern, out);
  w.u8(static_cast<std::uint8_t>(p.verdict));
  w.u8(static_cast<std::uint8_t>(p.priority));
  w.u8(static_cast<std::uint8_t>(p.issuer));
  w.u64(p.issued_at);
}

Result<SecurityPolicy, WireError> decode_policy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kPolicySize) return WireError::WrongLength;
  ByteReader r(bytes);
  SecurityPolicy p;
  p.policy_id = r.u64();
  auto pattern = decode_pattern(bytes.subspan(8, kMatchPatternSize));
  if (!pattern.ok()) return pattern.error();
  p.pattern = *pattern;
  ByteReader tail(bytes.subspan(8 + kMatchPatternSize));
  std::uint8_t verdict = tail.u8();
  std::uint8_t priority = tail.u8();
  std::uint8_t issuer = tail.u8();
  p.issued_at = tail.u64();
  if (verdict > 1) return WireError::BadFieldValue;
  if (priority < 1 || priority > 3) return WireError::BadFieldValue;
  if (issuer > 1) return WireError::BadFieldValue;
  p.verdict = static_cast<Verdict>(verdict);
  p.priority = static_cast<Priority>(priority);
  p.issuer = static_cast<Issuer>(issuer);
  return p;
}

std::vector<std::uint8_t> encode_response_payload(const AnalysisResponse& resp) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u32(resp.request_id);
  encode_policy(resp.policy, out);
  return out;
}

Result<AnalysisResponse, WireError> decode_response_payload(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != 4 + kPolicySize) return WireError::WrongLength;
  ByteReader r(bytes);
  AnalysisResponse resp;
  resp.request_id = r.u32();
  auto policy = decode_policy(bytes.subspan(4));
  if (!policy.ok()) return policy.error();
  resp.policy = *policy;
  return resp;
}

std::vector<std::uint8_t> encode_update_payload(const PolicyUpdate& update) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u64(update.seq);
  w.u8(static_cast<std::uint8_t>(update.tier));
  w.u16(static_cast<std::uint16_t>(update.policies.size()));
  for (const auto& p : update.policies) encode_policy(p, out);
  return out;
}

Result<PolicyUpdate, WireError> decode_update_payload(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 11) return WireError::Truncated;
  ByteReader r(bytes);
  PolicyUpdate update;
  update.seq = r.u64();
  std::uint8_t tier = r.u8();
  if (tier != 1 && tier != 2) return WireError::BadFieldValue;
  update.tier = static_cast<UpdateTier>(tier);
  std::uint16_t count = r.u16();
  if (bytes.size() != 11 + static_cast<std::size_t>(count) * kPolicySize)
    return WireError::LengthMismatch;
  update.policies.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    auto policy = decode_policy(bytes.subspan(11 + static_cast<std::size_t>(i) * kPolicySize,
                                              kPolicySize));
    if (!policy.ok()) return policy.error();
    update.policies.push_back(*policy);
  }
  return update;
}

std::vector<std::uint8_t> encode_report_payload(const SensorReport& report) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u32(report.box_id);
  w.u64(report.window_start);
  w.u64(report.window_end);
  w.u16(static_cast<std::uint16_t>(report.devices.size()));
  for (const auto& [device, stats] : report.devices) {
    w.u16(device);
    w.u32(stats.flows);
    w.u32(stats.drops);
    w.u32(stats.distinct_remotes);
  }
  w.u16(static_cast<std::uint16_t>(report.suspicious_sources.size()));
  for (const auto& [addr, tick] : report.suspicious_sources) {
    w.u32(addr);
    w.u64(tick);
  }
  return out;
}

Result<SensorReport, WireError> decode_report_payload(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  SensorReport report;
  report.box_id = r.u32();
  report.window_start = r.u64();
  report.window_end = r.u64();
  std::uint16_t device_count = r.u16();
  for (std::uint16_t i = 0; i < device_count; ++i) {
    std::uint16_t device = r.u16();
    DeviceStats stats;
    stats.flows = r.u32();
    stats.drops = r.u32();
    stats.distinct_remotes = r.u32();
    report.devices[device] = stats;
  }
  std::uint16_t susp_count = r.u16();
  for (std::uint16_t i = 0; i < susp_count; ++i) {
    std::uint32_t addr = r.u32();
    Tick tick = r.u64();
    report.suspicious_sources.emplace_back(addr, tick);
  }
  if (!r.ok() || r.remaining() != 0) return WireError::Truncated;
  return report;
}

std::vector<std::uint8_t> encode_rogue_payload(const RogueSourceReport& report) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u32(report.box_id);
  w.u16(static_cast<std::uint16_t>(report.sources.size()));
  for (const auto& [addr, tick] : report.sources) {
    w.u32(addr);
    w.u64(tick);
  }
  return out;
}

Result<RogueSourceReport, WireError> decode_rogue_payload(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  RogueSourceReport report;
  report.box_id = r.u32();
  std::uint16_t count = r.u16();
  for (std::uint16_t i = 0; i < count; ++i) {
    std::uint32_t addr = r.u32();
    Tick tick = r.u64();
    report.sources.emplace_back(addr, tick);
  }
  if (!r.ok() || r.remaining() != 0) return WireError::Truncated;
  return report;
}

std::vector<std::uint8_t> seal_frame(MessageType type, std::span<const std::uint8_t> payload,
                                     const trust::Certificate& signer_cert,
                                     const trust::SecretKey& signer_key) {
  std::vector<std::uint8_t> signed_bytes;
  signed_bytes.reserve(1 + payload.size());
  signed_bytes.push_back(static_cast<std::uint8_t>(type));
  signed_bytes.insert(signed_bytes.end(), payload.begin(), payload.end());
  trust::Signature sig = trust::sign(signer_key, signed_bytes);

  std::vector<std::uint8_t> out;
  out.reserve(4 + signed_bytes.size() + kSignatureBlockSize);
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(signed_bytes.size() + kSignatureBlockSize));
  w.bytes(signed_bytes);
  w.bytes(trust::encode_certificate(signer_cert));
  w.bytes(sig);
  return out;
}

Result<Frame, WireError> open_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) return WireError::Truncated;
  ByteReader r(bytes);
  std::uint32_t frame_len = r.u32();
  if (bytes.size() != 4 + static_cast<std::size_t>(frame_len)) return WireError::LengthMismatch;
  if (frame_len < 1 + kSignatureBlockSize) return WireError::Truncated;

  Frame frame;
  std::uint8_t type = r.u8();
  if (type < 1 || type > 5) return WireError::UnknownType;
  frame.type = static_cast<MessageType>(type);
  std::size_t payload_len = frame_len - 1 - kSignatureBlockSize;
  auto payload = r.bytes(payload_len);
  frame.payload.assign(payload.begin(), payload.end());
  frame.cert = trust::decode_certificate(r.bytes(trust::kCertificateSize));
  auto sig = r.bytes(trust::kSignatureSize);
  std::copy(sig.begin(), sig.end(), frame.sig.begin());
  return frame;
}

bool frame_signature_ok(const Frame& frame) {
  std::vector<std::uint8_t> signed_bytes;
  signed_bytes.reserve(1 + frame.payload.size());
  signed_bytes.push_back(static_cast<std::uint8_t>(frame.type));
  signed_bytes.insert(signed_bytes.end(), frame.payload.begin(), frame.payload.end());
  return trust::verify_signature(frame.cert.key, signed_bytes, frame.sig);
}

}  // namespace edgesec::wire
