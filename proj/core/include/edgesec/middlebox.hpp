#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "edgesec/policy.hpp"
#include "edgesec/profile.hpp"
#include "edgesec/result.hpp"

namespace edgesec {

enum class MiddleboxKind : std::uint8_t {
  Firewall = 1,
  Ids = 2,
  Dpi = 3,
};

/// Everything a middlebox sees about one flow. The label is the simulation's
/// stand-in for payload content (flows, not packets, are modeled).
struct FlowContext {
  FlowMetadata flow;
  TrafficClass klass;
  std::string label;  // empty = unlabeled
  Tick now = 0;
};

// --- Firewall ---------------------------------------------------------------

struct FirewallRule {
  TrafficClass klass;  // rule constrains this device class only
  MatchPattern pattern;
  Verdict action = Verdict::Drop;

  bool operator==(const FirewallRule&) const = default;
};

struct FirewallConfig {
  std::set<std::uint32_t> allowlist;  // known-safe server addresses
  std::vector<FirewallRule> rules;    // ordered, first match wins

  bool operator==(const FirewallConfig&) const = default;
};

enum class FirewallBasis : std::uint8_t {
  AllowlistHit,   // dst_addr on the known-server list
  RuleMatch,      // an ordered rule matched
  Unconstrained,  // no rule constrains this device class
};

struct FirewallDecision {
  Verdict verdict = Verdict::Allow;
  FirewallBasis basis = FirewallBasis::Unconstrained;
  std::optional<std::size_t> rule_index;
};

FirewallDecision eval_firewall(const FirewallConfig& fw, const FlowContext& ctx);

// --- IDS ---------------------------------------------------------------------

/// Fires when more than max_flows matching flows from one source land within
/// the trailing window.
struct RateCondition {
  std::uint32_t max_flows = 0;
  Tick window = 0;

  bool operator==(const RateCondition&) const = default;
};

struct IdsSignature {
  MatchPattern pattern;
  std::optional<RateCondition> rate;

  bool operator==(const IdsSignature&) const = default;
};

struct IdsConfig {
  std::vector<IdsSignature> signatures;

  bool operator==(const IdsConfig&) const = default;
};

/// Per-(signature, source) flow history for rate conditions.
struct IdsState {
  std::map<std::pair<std::size_t, std::uint32_t>, std::deque<Tick>> recent;
};

struct IdsDecision {
  Verdict verdict = Verdict::Allow;
  std::optional<std::size_t> signature_index;
};

IdsDecision eval_ids(const IdsConfig& ids, IdsState& state, const FlowContext& ctx);

// --- DPI ---------------------------------------------------------------------

struct DpiConfig {
  std::set<std::string> banned_labels;

  bool operator==(const DpiConfig&) const = default;
};

Verdict eval_dpi(const DpiConfig& dpi, const FlowContext& ctx);

// --- Instances, chains, manager ----------------------------------------------

using MiddleboxConfig = std::variant<FirewallConfig, IdsConfig, DpiConfig>;

struct StageResult {
  InstanceId instance = 0;
  Verdict verdict = Verdict::Allow;
  std::optional<FirewallBasis> fw_basis;
  std::optional<std::size_t> fw_rule_index;
  std::optional<std::size_t> ids_signature_index;
};

struct ChainVerdict {
  Verdict verdict = Verdict::Allow;
  InstanceId deciding_instance = 0;  // first Drop stage, or the last stage on full Allow
  std::vector<StageResult> stages;   // stages actually evaluated, in order
};

enum class ChainError : std::uint8_t { InstanceUnavailable };
enum class AssignError : std::uint8_t { NoInstance };
enum class SwapError : std::uint8_t { NoReplica };

/// Deploys middlebox instances, load-balances across identical ones, and
/// hot-swaps failed instances with state-synchronized replicas.
class MiddleboxManager {
 public:
  /// Instance ids are assigned sequentially from 1 in declaration order.
  InstanceId add_instance(MiddleboxKind kind, MiddleboxConfig config,
                          std::optional<InstanceId> replica_of = std::nullopt);

  /// Least-loaded live pool instance sharing the element's kind+config
  /// (ties break to the lowest instance id).
  Result<InstanceId, AssignError> assign(InstanceId chain_element);

  /// Evaluate stages in order; first Drop short-circuits unless full_session.
  Result<ChainVerdict, ChainError> eval_chain(const ServiceChain& chain, const FlowContext& ctx,
                                              bool full_session = false);

  /// Promote the failed instance's replica into the balancing pool.
  Result<InstanceId, SwapError> fail_and_swap(InstanceId failed);

  bool is_live(InstanceId id) const;
  std::uint64_t load_of(InstanceId id) const;
  std::size_t instance_count() const { return instances_.size(); }
  std::optional<MiddleboxKind> kind_of(InstanceId id) const;
  const MiddleboxConfig* config_of(InstanceId id) const;

 private:
  struct Instance {
    InstanceId id = 0;
    MiddleboxKind kind{};
    MiddleboxConfig config;
    IdsState state;
    std::optional<InstanceId> replica_of;  // set while waiting in the backup pool
    bool live = true;
    bool in_pool = true;  // replicas wait out of the pool until promoted
    std::uint64_t load = 0;
  };

  Verdict evaluate(Instance& inst, const FlowContext& ctx, StageResult& out);
  void sync_replicas(const Instance& primary);
  bool same_group(const Instance& a, const Instance& b) const;

  std::map<InstanceId, Instance> instances_;
  InstanceId next_id_ = 1;
};

}  // namespace edgesec
