#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edgesec/cloud.hpp"
#include "edgesec/middlebox.hpp"
#include "edgesec/result.hpp"

namespace edgesec::sim {

struct HostSpec {
  std::uint16_t device_id = 0;
  TrafficClass klass;
};

struct GatewaySpec {
  Verdict default_inbound = Verdict::Drop;
  Verdict default_outbound = Verdict::Allow;
  Tick pending_timeout = 2;
};

struct ProfileSpec {
  bool share_data = true;
  bool full_session_routing = false;
  std::vector<std::pair<TrafficClass, std::vector<std::string>>> chains;  // class -> middlebox names
};

struct ManualPolicySpec {
  MatchPattern pattern;
  Verdict verdict = Verdict::Drop;
};

struct SegmentSpec {
  std::uint32_t box_id = 0;
  std::vector<HostSpec> hosts;
  GatewaySpec gateway;
  ProfileSpec profile;
  std::vector<ManualPolicySpec> manual_policies;
};

struct FirewallRuleSpec {
  TrafficClass klass;
  MatchPattern pattern;
  Verdict action = Verdict::Drop;
};

struct IdsSignatureSpec {
  MatchPattern pattern;
  std::optional<RateCondition> rate;
};

struct MiddleboxSpec {
  std::string name;
  MiddleboxKind kind = MiddleboxKind::Firewall;
  bool allowlist_all_servers = false;           // firewall: allowlist = the server catalog
  std::vector<std::uint32_t> allowlist_extra;   // firewall: explicit addresses
  std::vector<FirewallRuleSpec> rules;
  std::vector<IdsSignatureSpec> signatures;     // ids
  std::vector<std::string> banned_labels;       // dpi
  int replicas = 0;
};

struct BenignSpec {
  std::uint32_t outbound_per_host_per_tick = 1;
  std::uint32_t nodes = 0;  // external peers opening inbound flows
  std::uint32_t inbound_per_node_per_tick = 1;
};

struct AttackScheduleEntry {
  std::size_t segment = 0;
  Tick start = 0;
  std::optional<Tick> end;  // default: scenario end
};

struct AttackSpec {
  std::uint32_t zombies = 0;
  std::uint32_t ports_per_zombie = 1000;
  std::uint32_t probes_per_tick = 5;  // per zombie, per targeted segment
  std::vector<AttackScheduleEntry> schedule;
};

struct FailureSpec {
  Tick tick = 0;
  std::string component;  // "cloud-primary" or "middlebox:<name>"
};

struct RevocationSpec {
  Tick tick = 0;
  std::uint32_t subject_id = 0;
};

/// Explicit flow injection, used by micro scenarios instead of generators.
struct FlowSpec {
  Tick tick = 0;
  std::size_t segment = 0;
  FlowMetadata flow;
  FlowDirection direction = FlowDirection::Outbound;
  std::string label;
  bool attack = false;
};

struct BaselinePolicySpec {
  MatchPattern pattern;
  Verdict verdict = Verdict::Drop;
  Priority priority = Priority::Normal;
};

/// Everything a run needs; the seed fully determines the outcome.
struct ScenarioConfig {
  std::uint64_t seed = 1;
  Tick ticks = 240;
  Tick link_delay = 1;
  bool collaboration = true;
  std::vector<std::pair<Tick, Tick>> low_activity_windows;
  Tick sensor_report_every = 0;  // 0 disables periodic sensor reports
  ScanDetectorConfig detector;
  BlacklistConfig blacklist;
  std::uint32_t server_count = 32;
  std::vector<std::uint16_t> server_ports = {80, 443};
  std::vector<MiddleboxSpec> middleboxes;
  std::vector<SegmentSpec> segments;
  std::vector<BaselinePolicySpec> baseline_policies;  // preloaded into the cloud store
  BenignSpec benign;
  AttackSpec attack;
  std::vector<FailureSpec> failures;
  std::vector<RevocationSpec> revocations;
  std::vector<FlowSpec> flows;
  bool backup_enabled = true;
};

// Deterministic address plan. Servers and external peers live in documentation
// ranges; segment hosts in 10.0.s.h.
std::uint32_t server_addr(std::uint32_t index);
std::uint32_t zombie_addr(std::uint32_t index);
std::uint32_t benign_node_addr(std::uint32_t index);
std::uint32_t host_addr(std::size_t segment_index, std::size_t host_index);

/// Empty vector means the scenario is valid; otherwise one message per problem.
std::vector<std::string> validate(const ScenarioConfig& config);

/// Parse + validate a JSON scenario. Error strings carry the file position
/// for parse errors and the offending path for semantic ones.
Result<ScenarioConfig, std::string> load_scenario_file(const std::string& path);
Result<ScenarioConfig, std::string> parse_scenario(const std::string& json_text);

/// Canonical serialization (used by tests to round-trip configs).
std::string scenario_to_json(const ScenarioConfig& config);

}  // namespace edgesec::sim
