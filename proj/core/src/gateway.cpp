#include "edgesec/gateway.hpp"

#include <algorithm>
#include <set>

namespace edgesec {

Gateway::Gateway(GatewayConfig config, trust::KeyPair keys, trust::Certificate cert,
                 trust::PublicKey ca_root)
    : config_(config), keys_(std::move(keys)), cert_(cert), ca_root_(ca_root) {
  db_.set_default_verdict(config_.default_inbound);
}

void Gateway::log_verdict(const FlowMetadata& flow, FlowDirection direction, Verdict v, Tick now) {
  GatewayEvent ev;
  ev.tick = now;
  ev.kind = v == Verdict::Allow ? GatewayEventKind::FlowAllowed : GatewayEventKind::FlowDropped;
  ev.flow = flow;
  ev.direction = direction;
  events_.push_back(ev);
}

void Gateway::queue_frame(wire::MessageType type, std::span<const std::uint8_t> payload) {
  outbox_.push_back(wire::seal_frame(type, payload, cert_, keys_.secret_key));
}

FlowDecision Gateway::process_flow(const FlowMetadata& flow, FlowDirection direction, Tick now) {
  if (auto policy = db_.lookup(flow)) {
    log_verdict(flow, direction, policy->verdict, now);
    return policy->verdict;
  }
  if (!css_connected_) {
    // Offline fallback: implicit per-direction verdict, not cached, so the
    // flow is re-asked once connectivity returns.
    Verdict v = direction_default(direction);
    log_verdict(flow, direction, v, now);
    return v;
  }
  AnalysisRequest req;
  req.box_id = config_.box_id;
  req.request_id = next_request_id_++;
  req.metadata = flow;
  pending_[req.request_id] = Parked{flow, direction, now};
  auto encoded = wire::encode_request(req);
  queue_frame(wire::MessageType::AnalysisRequest, encoded);
  GatewayEvent ev;
  ev.tick = now;
  ev.kind = GatewayEventKind::CloudRequested;
  ev.flow = flow;
  ev.direction = direction;
  events_.push_back(ev);
  return CloudPending{req};
}

bool Gateway::frame_trusted(const wire::Frame& frame) {
  if (frame.cert.subject_id != config_.css_id) return false;
  if (css_cert_verified_ && frame.cert == known_css_cert_) {
    // Cert already checked against the root once; only the signature is new.
  } else {
    if (!trust::certificate_valid(ca_root_, frame.cert)) return false;
    known_css_cert_ = frame.cert;
    css_cert_verified_ = true;
  }
  return wire::frame_signature_ok(frame);
}

void Gateway::note_suspicious(std::uint32_t source_addr, Tick now) {
  GatewayEvent ev;
  ev.tick = now;
  ev.kind = GatewayEventKind::SuspiciousSource;
  ev.source_addr = source_addr;
  events_.push_back(ev);
  unreported_suspicious_.emplace_back(source_addr, now);
}

Result<ResolvedFlow, ResponseError> Gateway::on_response(std::span<const std::uint8_t> frame_bytes,
                                                         Tick now, std::uint32_t source_addr) {
  auto frame = wire::open_frame(frame_bytes);
  if (!frame.ok() || frame->type != wire::MessageType::AnalysisResponse)
    return ResponseError::MalformedFrame;
  if (!frame_trusted(*frame)) {
    // Forged response: log, report, leave the flow parked for the timeout path.
    note_suspicious(source_addr, now);
    return ResponseError::BadSignature;
  }
  auto resp = wire::decode_response_payload(frame->payload);
  if (!resp.ok()) return ResponseError::MalformedFrame;
  auto it = pending_.find(resp->request_id);
  if (it == pending_.end()) return ResponseError::UnknownRequestId;

  Parked parked = it->second;
  std::uint32_t request_id = resp->request_id;
  pending_.erase(it);
  db_.insert(resp->policy);
  log_verdict(parked.flow, parked.direction, resp->policy.verdict, now);
  return ResolvedFlow{request_id, parked.flow, parked.direction, resp->policy.verdict, false};
}

Result<PolicyDb::ApplyResult, UpdateError> Gateway::receive_update(
    std::span<const std::uint8_t> frame_bytes, Tick now, std::uint32_t source_addr) {
  auto reject = [&](UpdateError err) {
    GatewayEvent ev;
    ev.tick = now;
    ev.kind = GatewayEventKind::UpdateRejected;
    ev.source_addr = source_addr;
    events_.push_back(ev);
    note_suspicious(source_addr, now);
    wire::RogueSourceReport report;
    report.box_id = config_.box_id;
    report.sources = std::exchange(unreported_suspicious_, {});
    queue_frame(wire::MessageType::RogueSourceReport, wire::encode_rogue_payload(report));
    return err;
  };

  auto frame = wire::open_frame(frame_bytes);
  if (!frame.ok() || frame->type != wire::MessageType::PolicyUpdate)
    return reject(UpdateError::MalformedFrame);
  if (!frame_trusted(*frame)) return reject(UpdateError::BadSignature);
  auto update = wire::decode_update_payload(frame->payload);
  if (!update.ok()) return reject(UpdateError::MalformedFrame);

  PolicyDb::ApplyResult applied = db_.apply_update(*update);
  GatewayEvent ev;
  ev.tick = now;
  ev.kind = GatewayEventKind::UpdateApplied;
  events_.push_back(ev);
  return applied;
}

SecurityPolicy Gateway::add_manual_policy(const MatchPattern& pattern, Verdict verdict, Tick now) {
  SecurityPolicy policy;
  policy.policy_id = next_manual_policy_id_++;
  policy.pattern = pattern;
  policy.verdict = verdict;
  policy.priority = Priority::Manual;
  policy.issuer = Issuer::LocalUser;
  policy.issued_at = now;
  db_.insert(policy);
  return policy;
}

std::vector<ResolvedFlow> Gateway::expire_pending(Tick now) {
  std::vector<ResolvedFlow> resolved;
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (now - it->second.asked_at > config_.pending_timeout) {
      Verdict v = direction_default(it->second.direction);
      log_verdict(it->second.flow, it->second.direction, v, now);
      resolved.push_back(ResolvedFlow{it->first, it->second.flow, it->second.direction, v, true});
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  return resolved;
}

double Gateway::security_rank(std::uint16_t device_id, Tick window_start, Tick window_end) const {
  std::uint64_t flows = 0;
  std::uint64_t drops = 0;
  for (const auto& ev : events_) {
    if (ev.tick < window_start || ev.tick > window_end) continue;
    if (!ev.flow || ev.flow->device_id != device_id) continue;
    if (ev.kind == GatewayEventKind::FlowAllowed) {
      ++flows;
    } else if (ev.kind == GatewayEventKind::FlowDropped) {
      ++flows;
      ++drops;
    }
  }
  if (flows == 0) return 100.0;
  return 100.0 * (1.0 - static_cast<double>(drops) / static_cast<double>(flows));
}

SensorReport Gateway::emit_sensor_report(Tick window_start, Tick window_end) {
  SensorReport report;
  report.box_id = config_.box_id;
  report.window_start = window_start;
  report.window_end = window_end;
  std::map<std::uint16_t, std::set<std::uint32_t>> remotes;
  for (const auto& ev : events_) {
    if (ev.tick < window_start || ev.tick > window_end) continue;
    if (ev.kind == GatewayEventKind::SuspiciousSource) {
      report.suspicious_sources.emplace_back(ev.source_addr, ev.tick);
      continue;
    }
    if (!ev.flow) continue;
    bool allowed = ev.kind == GatewayEventKind::FlowAllowed;
    bool dropped = ev.kind == GatewayEventKind::FlowDropped;
    if (!allowed && !dropped) continue;
    DeviceStats& stats = report.devices[ev.flow->device_id];
    stats.flows += 1;
    if (dropped) stats.drops += 1;
    if (ev.direction) {
      std::uint32_t remote =
          *ev.direction == FlowDirection::Inbound ? ev.flow->src_addr : ev.flow->dst_addr;
      remotes[ev.flow->device_id].insert(remote);
    }
  }
  for (auto& [device, stats] : report.devices)
    stats.distinct_remotes = static_cast<std::uint32_t>(remotes[device].size());
  queue_frame(wire::MessageType::SensorReport, wire::encode_report_payload(report));
  return report;
}

}  // namespace edgesec
