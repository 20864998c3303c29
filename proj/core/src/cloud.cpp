#include "edgesec/cloud.hpp"

#include <algorithm>
#include <cassert>

#include "edgesec/bytes.hpp"

namespace edgesec {

namespace {

void encode_profile(std::vector<std::uint8_t>& out, const UserProfile& profile) {
  ByteWriter w(out);
  w.u32(profile.box_id);
  w.u8(profile.share_data ? 1 : 0);
  w.u8(profile.full_session_routing ? 1 : 0);
  w.u16(static_cast<std::uint16_t>(profile.chains.size()));
  for (const auto& [klass, chain] : profile.chains) {
    w.u16(static_cast<std::uint16_t>(klass.size()));
    w.bytes({reinterpret_cast<const std::uint8_t*>(klass.data()), klass.size()});
    w.u16(static_cast<std::uint16_t>(chain.size()));
    for (InstanceId id : chain) w.u32(id);
  }
  w.u16(static_cast<std::uint16_t>(profile.class_map.size()));
  for (const auto& [device, klass] : profile.class_map) {
    w.u16(device);
    w.u16(static_cast<std::uint16_t>(klass.size()));
    w.bytes({reinterpret_cast<const std::uint8_t*>(klass.data()), klass.size()});
  }
}

UserProfile decode_profile(ByteReader& r) {
  UserProfile profile;
  profile.box_id = r.u32();
  profile.share_data = r.u8() != 0;
  profile.full_session_routing = r.u8() != 0;
  std::uint16_t chain_count = r.u16();
  for (std::uint16_t i = 0; i < chain_count; ++i) {
    std::uint16_t name_len = r.u16();
    auto name = r.bytes(name_len);
    TrafficClass klass(reinterpret_cast<const char*>(name.data()), name.size());
    std::uint16_t len = r.u16();
    ServiceChain chain;
    for (std::uint16_t j = 0; j < len; ++j) chain.push_back(r.u32());
    profile.chains[klass] = std::move(chain);
  }
  std::uint16_t map_count = r.u16();
  for (std::uint16_t i = 0; i < map_count; ++i) {
    std::uint16_t device = r.u16();
    std::uint16_t name_len = r.u16();
    auto name = r.bytes(name_len);
    profile.class_map[device] = TrafficClass(reinterpret_cast<const char*>(name.data()),
                                             name.size());
  }
  return profile;
}

std::uint32_t record_checksum(std::uint64_t seq, MutationKind kind,
                              std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> buf;
  ByteWriter w(buf);
  w.u64(seq);
  w.u8(static_cast<std::uint8_t>(kind));
  w.bytes(payload);
  return crc32(buf);
}

/// Dedupe key for store-side minting: pattern + verdict + priority.
std::vector<std::uint8_t> mint_key(const MatchPattern& pattern, Verdict verdict,
                                   Priority priority) {
  std::vector<std::uint8_t> out;
  wire::encode_pattern(pattern, out);
  out.push_back(static_cast<std::uint8_t>(verdict));
  out.push_back(static_cast<std::uint8_t>(priority));
  return out;
}

bool all_wildcard(const MatchPattern& p) { return p.specificity() == 0; }

}  // namespace

std::vector<std::uint8_t> encode_record(const ReplicationRecord& rec) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u64(rec.seq);
  w.u8(static_cast<std::uint8_t>(rec.kind));
  w.u32(static_cast<std::uint32_t>(rec.payload.size()));
  w.bytes(rec.payload);
  w.u32(rec.checksum);
  return out;
}

Result<ReplicationRecord, ReplicationError> decode_record(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 17) return ReplicationError::MalformedRecord;
  ByteReader r(bytes);
  ReplicationRecord rec;
  rec.seq = r.u64();
  std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 6) return ReplicationError::MalformedRecord;
  rec.kind = static_cast<MutationKind>(kind);
  std::uint32_t len = r.u32();
  if (bytes.size() != 17 + static_cast<std::size_t>(len)) return ReplicationError::MalformedRecord;
  auto payload = r.bytes(len);
  rec.payload.assign(payload.begin(), payload.end());
  rec.checksum = r.u32();
  if (record_checksum(rec.seq, rec.kind, rec.payload) != rec.checksum)
    return ReplicationError::BadChecksum;
  return rec;
}

CloudService::CloudService(CloudConfig config, trust::KeyPair keys, trust::Certificate cert,
                           const trust::CertAuthority* ca, MiddleboxManager middleboxes,
                           CloudRole role)
    : config_(std::move(config)),
      keys_(std::move(keys)),
      cert_(cert),
      ca_(ca),
      middleboxes_(std::move(middleboxes)),
      role_(role) {}

// --- replication plumbing ----------------------------------------------------

void CloudService::replicate(MutationKind kind, std::span<const std::uint8_t> payload) {
  ReplicationRecord rec;
  rec.seq = next_record_seq_++;
  rec.kind = kind;
  rec.payload.assign(payload.begin(), payload.end());
  rec.checksum = record_checksum(rec.seq, rec.kind, rec.payload);
  apply_mutation(kind, rec.payload);
  if (backup_ != nullptr) {
    auto status = backup_->apply_record(rec);
    assert(status.ok());
    (void)status;
  }
}

Status<ReplicationError> CloudService::apply_record(const ReplicationRecord& rec) {
  if (record_checksum(rec.seq, rec.kind, rec.payload) != rec.checksum)
    return ReplicationError::BadChecksum;
  if (rec.seq != next_record_seq_) {
    replication_gap_ = true;
    return ReplicationError::SequenceGap;
  }
  ++next_record_seq_;
  apply_mutation(rec.kind, rec.payload);
  return std::monostate{};
}

Status<PromotionError> CloudService::promote() {
  if (role_ == CloudRole::Primary) return PromotionError::AlreadyPrimary;
  if (replication_gap_) return PromotionError::ReplicationGap;
  role_ = CloudRole::Primary;
  // Everything queued so far duplicates emissions the old primary delivered.
  outbox_.clear();
  return std::monostate{};
}

void CloudService::apply_mutation(MutationKind kind, std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  switch (kind) {
    case MutationKind::RegisterBox: {
      Tick now = r.u64();
      std::uint32_t box_id = r.u32();
      trust::Certificate cert = trust::decode_certificate(r.bytes(trust::kCertificateSize));
      UserProfile profile = decode_profile(r);
      do_register_box(box_id, cert, profile, now);
      break;
    }
    case MutationKind::InboundFrame: {
      Tick now = r.u64();
      std::uint32_t from = r.u32();
      std::uint16_t label_len = r.u16();
      auto label_bytes = r.bytes(label_len);
      std::string label(reinterpret_cast<const char*>(label_bytes.data()), label_bytes.size());
      auto frame = r.bytes(r.remaining());
      do_handle_frame(from, frame, now, label);
      break;
    }
    case MutationKind::TickEnd:
      do_end_tick(r.u64());
      break;
    case MutationKind::RevokeSubject: {
      Tick now = r.u64();
      do_revoke(r.u32(), now);
      break;
    }
    case MutationKind::FailMiddlebox: {
      Tick now = r.u64();
      do_fail_middlebox(r.u32(), now);
      break;
    }
    case MutationKind::PreloadPolicy: {
      Tick now = r.u64();
      auto pattern = wire::decode_pattern(r.bytes(wire::kMatchPatternSize));
      Verdict verdict = static_cast<Verdict>(r.u8());
      Priority priority = static_cast<Priority>(r.u8());
      if (pattern.ok()) do_preload_policy(*pattern, verdict, priority, now);
      break;
    }
  }
}

// --- public entry points (replicated) -----------------------------------------

void CloudService::register_box(std::uint32_t box_id, const trust::Certificate& cert,
                                const UserProfile& profile, Tick now) {
  std::vector<std::uint8_t> payload;
  ByteWriter w(payload);
  w.u64(now);
  w.u32(box_id);
  w.bytes(trust::encode_certificate(cert));
  encode_profile(payload, profile);
  replicate(MutationKind::RegisterBox, payload);
}

void CloudService::handle_frame(std::uint32_t transport_from,
                                std::span<const std::uint8_t> frame, Tick now,
                                const std::string& label) {
  std::vector<std::uint8_t> payload;
  ByteWriter w(payload);
  w.u64(now);
  w.u32(transport_from);
  w.u16(static_cast<std::uint16_t>(label.size()));
  w.bytes({reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
  w.bytes(frame);
  replicate(MutationKind::InboundFrame, payload);
}

void CloudService::end_tick(Tick now) {
  std::vector<std::uint8_t> payload;
  ByteWriter w(payload);
  w.u64(now);
  replicate(MutationKind::TickEnd, payload);
}

void CloudService::on_revoked(std::uint32_t subject_id, Tick now) {
  std::vector<std::uint8_t> payload;
  ByteWriter w(payload);
  w.u64(now);
  w.u32(subject_id);
  replicate(MutationKind::RevokeSubject, payload);
}

void CloudService::fail_middlebox(InstanceId instance, Tick now) {
  std::vector<std::uint8_t> payload;
  ByteWriter w(payload);
  w.u64(now);
  w.u32(instance);
  replicate(MutationKind::FailMiddlebox, payload);
}

void CloudService::preload_policy(const MatchPattern& pattern, Verdict verdict, Priority priority,
                                  Tick now) {
  std::vector<std::uint8_t> payload;
  ByteWriter w(payload);
  w.u64(now);
  wire::encode_pattern(pattern, payload);
  w.u8(static_cast<std::uint8_t>(verdict));
  w.u8(static_cast<std::uint8_t>(priority));
  replicate(MutationKind::PreloadPolicy, payload);
}

// --- mutation bodies -----------------------------------------------------------

void CloudService::do_register_box(std::uint32_t box_id, const trust::Certificate& cert,
                                   const UserProfile& profile, Tick now) {
  if (boxes_.count(box_id) > 0) return;
  BoxState state;
  state.cert = cert;
  state.profile = profile;
  auto [it, inserted] = boxes_.emplace(box_id, std::move(state));
  (void)inserted;
  // Bootstrap: the full basic policy set, pushed immediately in both tiers.
  queue_update(box_id, it->second, UpdateTier::High, now);
  queue_update(box_id, it->second, UpdateTier::Bundled, now);
}

void CloudService::do_revoke(std::uint32_t subject_id, Tick now) {
  if (boxes_.count(subject_id) > 0 && blacklist_.count(subject_id) == 0)
    blacklist_box(subject_id, now, "revoked");
}

void CloudService::do_fail_middlebox(InstanceId instance, Tick now) {
  (void)now;
  auto swapped = middleboxes_.fail_and_swap(instance);
  (void)swapped;  // a missing replica leaves the instance failed; chains error out
}

void CloudService::do_preload_policy(const MatchPattern& pattern, Verdict verdict,
                                     Priority priority, Tick now) {
  store_insert(mint_policy(pattern, verdict, priority, now), StoreMeta{std::nullopt});
}

void CloudService::do_handle_frame(std::uint32_t transport_from,
                                   std::span<const std::uint8_t> frame_bytes, Tick now,
                                   const std::string& label) {
  auto frame = wire::open_frame(frame_bytes);
  if (!frame.ok()) {
    note_malformed(transport_from, now);
    return;
  }
  std::uint32_t claimed = frame->cert.subject_id;
  auto box_it = boxes_.find(claimed);
  if (box_it == boxes_.end()) return;  // UnknownBox: dropped
  if (blacklist_.count(claimed) > 0) return;
  // The signer cert must be the registered one; revocation is CA state.
  if (frame->cert != box_it->second.cert || (ca_ != nullptr && ca_->is_revoked(claimed)) ||
      !wire::frame_signature_ok(*frame)) {
    note_malformed(transport_from, now);
    return;
  }

  switch (frame->type) {
    case wire::MessageType::AnalysisRequest: {
      auto req = wire::decode_request(frame->payload);
      if (!req.ok() || req->box_id != claimed) {
        note_malformed(transport_from, now);
        return;
      }
      if (record_and_blacklist(claimed, *req, now)) return;  // just crossed the threshold
      auto resp = handle_request(*req, now, label);
      if (!resp.ok()) return;
      auto payload = wire::encode_response_payload(*resp);
      outbox_.push_back(Emission{
          claimed, wire::seal_frame(wire::MessageType::AnalysisResponse, payload, cert_,
                                    keys_.secret_key)});
      break;
    }
    case wire::MessageType::SensorReport: {
      auto report = wire::decode_report_payload(frame->payload);
      if (!report.ok() || report->box_id != claimed) {
        note_malformed(transport_from, now);
        return;
      }
      aggregate_sensor_report(*report);
      break;
    }
    case wire::MessageType::RogueSourceReport: {
      auto report = wire::decode_rogue_payload(frame->payload);
      if (!report.ok() || report->box_id != claimed) {
        note_malformed(transport_from, now);
        return;
      }
      for (const auto& [addr, tick] : report->sources) suspicion_counters_[addr] += 1;
      break;
    }
    default:
      note_malformed(transport_from, now);
      break;
  }
}

// --- request path ----------------------------------------------------------------

Result<AnalysisResponse, RequestError> CloudService::handle_request(const AnalysisRequest& req,
                                                                    Tick now,
                                                                    const std::string& label) {
  auto box_it = boxes_.find(req.box_id);
  if (box_it == boxes_.end()) return RequestError::UnknownBox;
  if (blacklist_.count(req.box_id) > 0) return RequestError::BlacklistedBox;
  BoxState& box = box_it->second;

  ++request_count_;
  request_log_.emplace_back(req.box_id, req, now);
  if (box.profile.share_data) track_probe(req.box_id, req.metadata, now);

  // Store hit: an existing visible policy answers without chain evaluation.
  // A policy delivered in a response counts as sent for delta purposes.
  auto hit = store_.lookup_if(req.metadata, [&](const SecurityPolicy& p) {
    return store_visible(p, req.box_id);
  });
  if (hit) {
    box.sent.insert(hit->policy_id);
    return AnalysisResponse{req.request_id, *hit};
  }

  // Miss: evaluate the subscriber's chain for this device's traffic class.
  FlowContext ctx;
  ctx.flow = req.metadata;
  ctx.label = label;
  ctx.now = now;
  auto class_it = box.profile.class_map.find(req.metadata.device_id);
  // Devices the profile does not classify fall into the first configured class.
  ctx.klass = class_it != box.profile.class_map.end() ? class_it->second
                                                      : box.profile.chains.begin()->first;
  auto chain_it = box.profile.chains.find(ctx.klass);
  if (chain_it == box.profile.chains.end()) chain_it = box.profile.chains.begin();

  auto chain_verdict = middleboxes_.eval_chain(chain_it->second, ctx,
                                               box.profile.full_session_routing);
  if (!chain_verdict.ok()) {
    // Both an instance and its replica are gone: fail closed, nothing cached.
    SecurityPolicy fallback = mint_policy(MatchPattern::exact(req.metadata), Verdict::Drop,
                                          Priority::Normal, now);
    return AnalysisResponse{req.request_id, fallback};
  }

  const ChainVerdict& cv = *chain_verdict;
  const FlowMetadata& f = req.metadata;
  MatchPattern exact5{f.src_addr, f.dst_addr, std::nullopt, f.dst_port, f.protocol, f.device_id};

  SecurityPolicy response;
  std::vector<std::pair<MatchPattern, Verdict>> extras;

  if (cv.verdict == Verdict::Allow) {
    response = mint_policy(exact5, Verdict::Allow, Priority::Normal, now);
  } else {
    const StageResult* deciding = nullptr;
    for (const auto& stage : cv.stages)
      if (stage.instance == cv.deciding_instance) deciding = &stage;
    auto kind = middleboxes_.kind_of(cv.deciding_instance);
    const MiddleboxConfig* mb_config = middleboxes_.config_of(cv.deciding_instance);

    if (kind == MiddleboxKind::Firewall && deciding != nullptr && deciding->fw_rule_index &&
        mb_config != nullptr) {
      const auto& fw = std::get<FirewallConfig>(*mb_config);
      const FirewallRule& rule = fw.rules[*deciding->fw_rule_index];
      // Specific answer for this flow, generalized rule for the store.
      MatchPattern specific;
      specific.device_id = f.device_id;
      specific.dst_addr = f.dst_addr;
      response = mint_policy(specific, Verdict::Drop, Priority::Normal, now);
      MatchPattern general = rule.pattern;
      general.device_id = f.device_id;
      extras.emplace_back(general, Verdict::Drop);
      if (all_wildcard(rule.pattern)) {
        // Deny-unknown catch-all: pair the drop with per-known-server allows
        // so "everything except the safe servers" stays expressible.
        for (std::uint32_t server : fw.allowlist) {
          MatchPattern allow;
          allow.device_id = f.device_id;
          allow.dst_addr = server;
          extras.emplace_back(allow, Verdict::Allow);
        }
      }
    } else if (kind == MiddleboxKind::Ids && deciding != nullptr &&
               deciding->ids_signature_index && mb_config != nullptr) {
      const auto& ids = std::get<IdsConfig>(*mb_config);
      const IdsSignature& sig = ids.signatures[*deciding->ids_signature_index];
      MatchPattern pattern = sig.pattern;
      if (sig.rate) pattern.src_addr = f.src_addr;  // rate hits are per-source
      response = mint_policy(pattern, Verdict::Drop, Priority::Normal, now);
    } else {
      response = mint_policy(exact5, Verdict::Drop, Priority::Normal, now);
    }
  }

  if (box.profile.share_data) {
    store_insert(response, StoreMeta{config_.collaboration
                                         ? std::nullopt
                                         : std::optional<std::uint32_t>(req.box_id)});
    for (const auto& [pattern, verdict] : extras) {
      auto key = mint_key(pattern, verdict, Priority::Normal);
      if (minted_keys_.count(key) > 0) continue;
      minted_keys_.insert(key);
      SecurityPolicy extra = mint_policy(pattern, verdict, Priority::Normal, now);
      store_insert(extra, StoreMeta{config_.collaboration
                                        ? std::nullopt
                                        : std::optional<std::uint32_t>(req.box_id)});
    }
  }
  box.sent.insert(response.policy_id);  // delivered in this response
  return AnalysisResponse{req.request_id, response};
}

SecurityPolicy CloudService::mint_policy(MatchPattern pattern, Verdict verdict, Priority priority,
                                         Tick now) {
  SecurityPolicy p;
  p.policy_id = next_policy_id_++;
  p.pattern = std::move(pattern);
  p.verdict = verdict;
  p.priority = priority;
  p.issuer = Issuer::Css;
  p.issued_at = now;
  return p;
}

bool CloudService::store_visible(const SecurityPolicy& policy, std::uint32_t box_id) const {
  if (config_.collaboration) return true;
  auto it = store_meta_.find(policy.policy_id);
  if (it == store_meta_.end()) return true;
  return !it->second.origin_box || *it->second.origin_box == box_id;
}

void CloudService::store_insert(const SecurityPolicy& policy, StoreMeta meta) {
  store_.insert(policy);
  store_meta_[policy.policy_id] = meta;
}

// --- suspicious behaviour / blacklist ----------------------------------------------

std::optional<BlacklistEvent> CloudService::record_and_blacklist(std::uint32_t box_id,
                                                                 const AnalysisRequest& req,
                                                                 Tick now) {
  auto it = boxes_.find(box_id);
  if (it == boxes_.end()) return std::nullopt;
  auto& ticks = it->second.repeat_tracker[req.request_id];
  ticks.push_back(now);
  Tick cutoff = now >= config_.blacklist.window ? now - config_.blacklist.window + 1 : 0;
  while (!ticks.empty() && ticks.front() < cutoff) ticks.pop_front();
  if (ticks.size() > config_.blacklist.repeat_limit) {
    blacklist_box(box_id, now, "repeated-requests");
    return blacklist_events_.back();
  }
  return std::nullopt;
}

std::optional<BlacklistEvent> CloudService::note_malformed(std::uint32_t box_id, Tick now) {
  std::uint32_t& count = malformed_counts_[box_id];
  ++count;
  if (count >= config_.blacklist.malformed_limit && blacklist_.count(box_id) == 0) {
    blacklist_box(box_id, now, "malformed-frames");
    return blacklist_events_.back();
  }
  return std::nullopt;
}

void CloudService::blacklist_box(std::uint32_t box_id, Tick now, const std::string& reason) {
  if (blacklist_.count(box_id) > 0) return;
  blacklist_.insert(box_id);
  blacklist_events_.push_back(BlacklistEvent{box_id, now, reason});
}

// --- analytics -------------------------------------------------------------------

void CloudService::track_probe(std::uint32_t box_id, const FlowMetadata& flow, Tick now) {
  ScanScope scope = config_.collaboration ? kGlobalScope : box_id;
  scan_tracker_[scope][flow.src_addr][{flow.dst_addr, flow.dst_port}] = ProbeRecord{now};
}

std::vector<std::pair<CloudService::ScanScope, std::uint32_t>> CloudService::detect_port_scan(
    Tick now) {
  std::vector<std::pair<ScanScope, std::uint32_t>> found;
  Tick cutoff = now >= config_.detector.window ? now - config_.detector.window + 1 : 0;
  for (auto& [scope, sources] : scan_tracker_) {
    for (auto& [src, probes] : sources) {
      if (detected_[scope].count(src) > 0) continue;
      std::set<std::uint16_t> ports;
      for (auto it = probes.begin(); it != probes.end();) {
        if (it->second.last_seen < cutoff) {
          it = probes.erase(it);
        } else {
          ports.insert(it->first.second);
          ++it;
        }
      }
      if (ports.size() >= config_.detector.distinct_ports) {
        detected_[scope].insert(src);
        found.emplace_back(scope, src);
      }
    }
  }
  return found;
}

void CloudService::aggregate_sensor_report(const SensorReport& report) {
  auto it = boxes_.find(report.box_id);
  if (it == boxes_.end()) return;
  if (!it->second.profile.share_data) return;  // opt-out: excluded from cross-network analytics
  for (const auto& [addr, tick] : report.suspicious_sources) suspicion_counters_[addr] += 1;
  for (const auto& [device, stats] : report.devices) {
    DeviceStats& agg = device_counters_[{report.box_id, device}];
    agg.flows += stats.flows;
    agg.drops += stats.drops;
    agg.distinct_remotes = std::max(agg.distinct_remotes, stats.distinct_remotes);
  }
}

// --- dissemination ------------------------------------------------------------------

std::optional<PolicyUpdate> CloudService::generate_update(std::uint32_t box_id, UpdateTier tier,
                                                          Tick now) {
  auto it = boxes_.find(box_id);
  if (it == boxes_.end() || blacklist_.count(box_id) > 0) return std::nullopt;
  BoxState& box = it->second;

  PolicyUpdate update;
  update.tier = tier;
  store_.for_each_policy([&](const SecurityPolicy& p) {
    UpdateTier policy_tier = p.priority == Priority::High ? UpdateTier::High : UpdateTier::Bundled;
    if (policy_tier != tier) return;
    if (box.sent.count(p.policy_id) > 0) return;
    if (!store_visible(p, box_id)) return;
    update.policies.push_back(p);
  });
  if (update.policies.empty()) return std::nullopt;

  update.seq = box.next_update_seq++;
  for (const auto& p : update.policies) {
    box.sent.insert(p.policy_id);
    emission_log_.push_back(UpdateEmission{box_id, p.policy_id, update.seq, now});
  }
  return update;
}

void CloudService::queue_update(std::uint32_t box_id, BoxState& box, UpdateTier tier, Tick now) {
  (void)box;
  auto update = generate_update(box_id, tier, now);
  if (!update) return;
  auto payload = wire::encode_update_payload(*update);
  outbox_.push_back(Emission{
      box_id, wire::seal_frame(wire::MessageType::PolicyUpdate, payload, cert_,
                               keys_.secret_key)});
}

bool CloudService::in_low_activity_window(Tick now) const {
  for (const auto& [start, end] : config_.low_activity_windows)
    if (now >= start && now < end) return true;
  return false;
}

void CloudService::do_end_tick(Tick now) {
  // Detector pass: newly flagged sources become immediate drop policies.
  for (const auto& [scope, src] : detect_port_scan(now)) {
    MatchPattern pattern;
    pattern.src_addr = src;
    SecurityPolicy policy = mint_policy(pattern, Verdict::Drop, Priority::High, now);
    store_insert(policy, StoreMeta{scope == kGlobalScope
                                       ? std::nullopt
                                       : std::optional<std::uint32_t>(scope)});
    detections_.push_back(DetectionEvent{
        src, now, scope == kGlobalScope ? std::nullopt : std::optional<std::uint32_t>(scope)});
  }
  // High-priority deltas go out every tick; the rest wait for a quiet window.
  bool bundled_ok = in_low_activity_window(now);
  for (auto& [box_id, box] : boxes_) {
    if (blacklist_.count(box_id) > 0) continue;
    queue_update(box_id, box, UpdateTier::High, now);
    if (bundled_ok) queue_update(box_id, box, UpdateTier::Bundled, now);
  }
}

std::vector<SecurityPolicy> CloudService::store_policies_visible_to(std::uint32_t box_id) const {
  std::vector<SecurityPolicy> out;
  store_.for_each_policy([&](const SecurityPolicy& p) {
    if (store_visible(p, box_id)) out.push_back(p);
  });
  return out;
}

}  // namespace edgesec
