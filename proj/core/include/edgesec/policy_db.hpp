#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "edgesec/policy.hpp"
#include "edgesec/result.hpp"

namespace edgesec {

enum class SnapshotError : std::uint8_t {
  Corrupt,  // bad magic/version/length or checksum mismatch
};

/// The gateway-local Pol-DB (also reused as the cloud's policy store matcher).
/// Lookup resolves conflicts by the (priority, specificity, recency, id) total
/// order. Exact 6-tuple patterns sit in a hash index; wildcard patterns are
/// bucketed by concrete src_addr where present, linear-scanned otherwise.
///
/// Single-writer, multi-reader: lookups are const and may run concurrently;
/// insert/apply_update/restore require exclusive access.
class PolicyDb {
 public:
  struct ApplyResult {
    std::size_t applied = 0;
    std::size_t skipped = 0;

    bool operator==(const ApplyResult&) const = default;
  };

  /// Winning policy among all that match, or nullopt (Miss).
  std::optional<SecurityPolicy> lookup(const FlowMetadata& flow) const;

  /// Lookup restricted to policies the predicate accepts (used by the cloud
  /// store to scope visibility per box).
  std::optional<SecurityPolicy> lookup_if(
      const FlowMetadata& flow, const std::function<bool(const SecurityPolicy&)>& pred) const;

  /// Insert or replace the policy with the same (issuer, policy_id).
  void insert(const SecurityPolicy& policy);

  /// Apply a delta batch. Re-applying an already-seen seq is not a failure:
  /// it reports everything skipped.
  ApplyResult apply_update(const PolicyUpdate& update);
  bool seq_applied(std::uint64_t seq) const { return applied_seqs_.count(seq) > 0; }

  /// Snapshot file: "EGPD" magic, version byte, policy count, canonical
  /// policies, trailing CRC-32.
  std::vector<std::uint8_t> snapshot() const;
  static Result<PolicyDb, SnapshotError> restore(std::span<const std::uint8_t> bytes);

  Verdict default_verdict() const { return default_verdict_; }
  void set_default_verdict(Verdict v) { default_verdict_ = v; }

  std::size_t size() const { return policies_.size(); }
  std::vector<SecurityPolicy> all_policies() const;
  void for_each_policy(const std::function<void(const SecurityPolicy&)>& fn) const {
    for (const auto& [key, policy] : policies_) fn(policy);
  }

 private:
  struct Key {
    Issuer issuer;
    std::uint64_t id;

    auto operator<=>(const Key&) const = default;
  };

  void index_insert(const Key& key, const SecurityPolicy& policy);
  void index_erase(const Key& key, const SecurityPolicy& policy);

  std::map<Key, SecurityPolicy> policies_;
  std::unordered_map<FlowMetadata, std::vector<Key>, FlowKeyHash> exact_;
  std::unordered_map<std::uint32_t, std::vector<Key>> by_src_;
  std::vector<Key> rest_;
  std::set<std::uint64_t> applied_seqs_;
  Verdict default_verdict_ = Verdict::Drop;
};

}  // namespace edgesec
