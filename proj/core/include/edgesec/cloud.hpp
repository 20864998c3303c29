#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgesec/gateway.hpp"
#include "edgesec/middlebox.hpp"
#include "edgesec/policy.hpp"
#include "edgesec/policy_db.hpp"
#include "edgesec/profile.hpp"
#include "edgesec/result.hpp"
#include "edgesec/trust.hpp"
#include "edgesec/wire.hpp"

namespace edgesec {

struct ScanDetectorConfig {
  std::uint32_t distinct_ports = 10;  // distinct (dst, port) pairs to flag a source
  Tick window = 50;
};

struct BlacklistConfig {
  std::uint32_t repeat_limit = 5;  // identical requests tolerated within the window
  Tick window = 50;
  std::uint32_t malformed_limit = 3;
};

struct CloudConfig {
  std::uint32_t css_id = 0;
  ScanDetectorConfig detector;
  BlacklistConfig blacklist;
  bool collaboration = true;  // off: detections and minted policies stay scoped to their origin box
  std::vector<std::pair<Tick, Tick>> low_activity_windows;  // [start, end) for bundled updates
};

enum class CloudRole : std::uint8_t { Primary, Backup };

enum class RequestError : std::uint8_t {
  UnknownBox,
  BlacklistedBox,
  MalformedRequest,
  BadSignature,
};

enum class ReplicationError : std::uint8_t {
  SequenceGap,
  BadChecksum,
  MalformedRecord,
};

enum class PromotionError : std::uint8_t {
  ReplicationGap,
  AlreadyPrimary,
};

enum class MutationKind : std::uint8_t {
  RegisterBox = 1,
  InboundFrame = 2,
  TickEnd = 3,
  RevokeSubject = 4,
  FailMiddlebox = 5,
  PreloadPolicy = 6,
};

/// One streamed state mutation. The backup re-executes the payload, so both
/// sides stay byte-identical without per-field diffing.
struct ReplicationRecord {
  std::uint64_t seq = 0;
  MutationKind kind{};
  std::vector<std::uint8_t> payload;
  std::uint32_t checksum = 0;
};

std::vector<std::uint8_t> encode_record(const ReplicationRecord& rec);
Result<ReplicationRecord, ReplicationError> decode_record(std::span<const std::uint8_t> bytes);

/// Framed bytes addressed to one gateway.
struct Emission {
  std::uint32_t box_id = 0;
  std::vector<std::uint8_t> frame;
};

/// Audit line: one policy delivered to one box inside one update.
struct UpdateEmission {
  std::uint32_t box_id = 0;
  std::uint64_t policy_id = 0;
  std::uint64_t seq = 0;
  Tick tick = 0;
};

struct DetectionEvent {
  std::uint32_t source_addr = 0;
  Tick tick = 0;
  std::optional<std::uint32_t> scope_box;  // set when collaboration is off
};

struct BlacklistEvent {
  std::uint32_t box_id = 0;
  Tick tick = 0;
  std::string reason;
};

/// The cloud security service: request handling per subscriber profile,
/// the policy store, port-scan analytics, tiered delta dissemination, rogue
/// box blacklisting, and a hot-swappable backup fed by a synchronous
/// replication stream.
class CloudService {
 public:
  CloudService(CloudConfig config, trust::KeyPair keys, trust::Certificate cert,
               const trust::CertAuthority* ca, MiddleboxManager middleboxes,
               CloudRole role = CloudRole::Primary);

  // --- registration / administration -----------------------------------
  void register_box(std::uint32_t box_id, const trust::Certificate& cert,
                    const UserProfile& profile, Tick now);
  bool box_registered(std::uint32_t box_id) const { return boxes_.count(box_id) > 0; }
  void on_revoked(std::uint32_t subject_id, Tick now);
  void fail_middlebox(InstanceId instance, Tick now);

  /// Seed the policy store (the "basic set" new boxes bootstrap from).
  void preload_policy(const MatchPattern& pattern, Verdict verdict, Priority priority, Tick now);

  // --- request path ------------------------------------------------------
  /// Transport entry point: structural decode, signature and blacklist
  /// checks, then dispatch. `transport_from` is the sending box as known to
  /// the link layer, used to attribute malformed frames. `label` is the
  /// flow's content label as seen by middleboxes when traffic transits the
  /// cloud; payloads are not modeled on the wire.
  void handle_frame(std::uint32_t transport_from, std::span<const std::uint8_t> frame, Tick now,
                    const std::string& label = {});

  /// Algorithm core: store hit or profile-chain evaluation; mints, stores,
  /// and returns the policy. Callers have already verified the frame.
  Result<AnalysisResponse, RequestError> handle_request(const AnalysisRequest& req, Tick now,
                                                        const std::string& label = {});

  /// Suspicious-behaviour bookkeeping; returns the event when the box
  /// crosses a blacklist threshold.
  std::optional<BlacklistEvent> record_and_blacklist(std::uint32_t box_id,
                                                     const AnalysisRequest& req, Tick now);
  std::optional<BlacklistEvent> note_malformed(std::uint32_t box_id, Tick now);

  /// Merge a sensor report into global per-source/per-device counters
  /// (only share_data profiles feed cross-network analytics).
  void aggregate_sensor_report(const SensorReport& report);

  // --- dissemination -----------------------------------------------------
  /// Delta for one box and tier: store-visible policies minus the box's
  /// sent-set. nullopt when nothing is new.
  std::optional<PolicyUpdate> generate_update(std::uint32_t box_id, UpdateTier tier, Tick now);

  /// Per-tick driver: run the scan detector, then push High deltas to every
  /// non-blacklisted box (Bundled too inside a low-activity window).
  void end_tick(Tick now);

  std::vector<Emission> take_outbox() { return std::exchange(outbox_, {}); }

  // --- replication / failover ---------------------------------------------
  /// Attach the backup; every subsequent mutation streams to it synchronously.
  void connect_backup(CloudService* backup) { backup_ = backup; }

  /// Backup side: apply one streamed record. Gaps poison later promotion.
  Status<ReplicationError> apply_record(const ReplicationRecord& rec);

  /// Backup -> primary. Refuses when the replication stream had holes.
  Status<PromotionError> promote();

  CloudRole role() const { return role_; }

  // --- introspection (tests, analytics export) ----------------------------
  bool is_blacklisted(std::uint32_t box_id) const { return blacklist_.count(box_id) > 0; }
  const std::vector<UpdateEmission>& emission_log() const { return emission_log_; }
  const std::vector<DetectionEvent>& detections() const { return detections_; }
  const std::vector<BlacklistEvent>& blacklist_events() const { return blacklist_events_; }
  std::uint64_t request_count() const { return request_count_; }
  std::size_t store_size() const { return store_.size(); }
  std::vector<SecurityPolicy> store_policies_visible_to(std::uint32_t box_id) const;
  const std::map<std::uint32_t, std::uint64_t>& suspicion_counters() const {
    return suspicion_counters_;
  }
  const std::vector<std::tuple<std::uint32_t, AnalysisRequest, Tick>>& request_log() const {
    return request_log_;
  }
  MiddleboxManager& middleboxes() { return middleboxes_; }

 private:
  struct BoxState {
    trust::Certificate cert;
    UserProfile profile;
    std::set<std::uint64_t> sent;  // policy ids ever included in an update to this box
    std::uint64_t next_update_seq = 1;
    std::map<std::uint32_t, std::deque<Tick>> repeat_tracker;  // request_id -> recent ticks
  };

  struct StoreMeta {
    std::optional<std::uint32_t> origin_box;  // nullopt = globally visible
  };

  struct ProbeRecord {
    Tick last_seen = 0;
  };

  // scope key: origin box under no-collaboration, 0 under collaboration
  using ScanScope = std::uint32_t;
  static constexpr ScanScope kGlobalScope = 0;

  void replicate(MutationKind kind, std::span<const std::uint8_t> payload);
  void apply_mutation(MutationKind kind, std::span<const std::uint8_t> payload);
  void do_register_box(std::uint32_t box_id, const trust::Certificate& cert,
                       const UserProfile& profile, Tick now);
  void do_handle_frame(std::uint32_t transport_from, std::span<const std::uint8_t> frame,
                       Tick now, const std::string& label);
  void do_end_tick(Tick now);
  void do_revoke(std::uint32_t subject_id, Tick now);
  void do_fail_middlebox(InstanceId instance, Tick now);
  void do_preload_policy(const MatchPattern& pattern, Verdict verdict, Priority priority,
                         Tick now);

  bool store_visible(const SecurityPolicy& policy, std::uint32_t box_id) const;
  void store_insert(const SecurityPolicy& policy, StoreMeta meta);
  SecurityPolicy mint_policy(MatchPattern pattern, Verdict verdict, Priority priority, Tick now);
  void track_probe(std::uint32_t box_id, const FlowMetadata& flow, Tick now);
  std::vector<std::pair<ScanScope, std::uint32_t>> detect_port_scan(Tick now);
  void queue_update(std::uint32_t box_id, BoxState& box, UpdateTier tier, Tick now);
  void blacklist_box(std::uint32_t box_id, Tick now, const std::string& reason);
  bool in_low_activity_window(Tick now) const;

  CloudConfig config_;
  trust::KeyPair keys_;
  trust::Certificate cert_;
  const trust::CertAuthority* ca_;
  MiddleboxManager middleboxes_;
  CloudRole role_;

  std::map<std::uint32_t, BoxState> boxes_;
  PolicyDb store_;  // matcher over the policy store
  std::map<std::uint64_t, StoreMeta> store_meta_;
  std::uint64_t next_policy_id_ = 1;
  std::set<std::uint32_t> blacklist_;

  // per scope, per source, distinct (dst, port) probes with last-seen ticks
  std::map<ScanScope, std::map<std::uint32_t, std::map<std::pair<std::uint32_t, std::uint16_t>,
                                                       ProbeRecord>>>
      scan_tracker_;
  std::map<ScanScope, std::set<std::uint32_t>> detected_;

  std::uint64_t request_count_ = 0;
  std::vector<std::tuple<std::uint32_t, AnalysisRequest, Tick>> request_log_;
  std::map<std::uint32_t, std::uint32_t> malformed_counts_;    // sender -> bad frames seen
  std::set<std::vector<std::uint8_t>> minted_keys_;            // dedupes store-side minting
  std::map<std::uint32_t, std::uint64_t> suspicion_counters_;  // source addr -> reports
  std::map<std::pair<std::uint32_t, std::uint16_t>, DeviceStats> device_counters_;

  std::vector<Emission> outbox_;
  std::vector<UpdateEmission> emission_log_;
  std::vector<DetectionEvent> detections_;
  std::vector<BlacklistEvent> blacklist_events_;

  CloudService* backup_ = nullptr;
  std::uint64_t next_record_seq_ = 1;  // primary: next to send; backup: next expected
  bool replication_gap_ = false;
};

}  // namespace edgesec
