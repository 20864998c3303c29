#include "edgesec/policy_db.hpp"

#include <algorithm>

#include "edgesec/bytes.hpp"
#include "edgesec/wire.hpp"

namespace edgesec {

namespace {

constexpr std::uint8_t kSnapshotMagic[4] = {'E', 'G', 'P', 'D'};
constexpr std::uint8_t kSnapshotVersion = 1;

}  // namespace

std::optional<SecurityPolicy> PolicyDb::lookup(const FlowMetadata& flow) const {
  return lookup_if(flow, [](const SecurityPolicy&) { return true; });
}

std::optional<SecurityPolicy> PolicyDb::lookup_if(
    const FlowMetadata& flow, const std::function<bool(const SecurityPolicy&)>& pred) const {
  const SecurityPolicy* best = nullptr;
  auto consider = [&](const Key& key) {
    const SecurityPolicy& p = policies_.at(key);
    if (!matches(p.pattern, flow)) return;
    if (!pred(p)) return;
    if (best == nullptr || ranks_below(*best, p)) best = &p;
  };
  if (auto it = exact_.find(flow); it != exact_.end())
    for (const Key& key : it->second) consider(key);
  if (auto it = by_src_.find(flow.src_addr); it != by_src_.end())
    for (const Key& key : it->second) consider(key);
  for (const Key& key : rest_) consider(key);
  if (best == nullptr) return std::nullopt;
  return *best;
}

void PolicyDb::index_insert(const Key& key, const SecurityPolicy& policy) {
  const MatchPattern& p = policy.pattern;
  if (p.is_exact()) {
    FlowMetadata f{*p.src_addr, *p.dst_addr, *p.src_port, *p.dst_port, *p.protocol, *p.device_id};
    exact_[f].push_back(key);
  } else if (p.src_addr) {
    by_src_[*p.src_addr].push_back(key);
  } else {
    rest_.push_back(key);
  }
}

void PolicyDb::index_erase(const Key& key, const SecurityPolicy& policy) {
  auto drop_from = [&key](std::vector<Key>& bucket) {
    bucket.erase(std::remove(bucket.begin(), bucket.end(), key), bucket.end());
  };
  const MatchPattern& p = policy.pattern;
  if (p.is_exact()) {
    FlowMetadata f{*p.src_addr, *p.dst_addr, *p.src_port, *p.dst_port, *p.protocol, *p.device_id};
    if (auto it = exact_.find(f); it != exact_.end()) {
      drop_from(it->second);
      if (it->second.empty()) exact_.erase(it);
    }
  } else if (p.src_addr) {
    if (auto it = by_src_.find(*p.src_addr); it != by_src_.end()) {
      drop_from(it->second);
      if (it->second.empty()) by_src_.erase(it);
    }
  } else {
    drop_from(rest_);
  }
}

void PolicyDb::insert(const SecurityPolicy& policy) {
  Key key{policy.issuer, policy.policy_id};
  if (auto it = policies_.find(key); it != policies_.end()) {
    index_erase(key, it->second);
    it->second = policy;
  } else {
    policies_.emplace(key, policy);
  }
  index_insert(key, policy);
}

PolicyDb::ApplyResult PolicyDb::apply_update(const PolicyUpdate& update) {
  if (applied_seqs_.count(update.seq) > 0)
    return ApplyResult{0, update.policies.size()};
  for (const auto& p : update.policies) insert(p);
  applied_seqs_.insert(update.seq);
  return ApplyResult{update.policies.size(), 0};
}

std::vector<std::uint8_t> PolicyDb::snapshot() const {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.bytes(kSnapshotMagic);
  w.u8(kSnapshotVersion);
  w.u32(static_cast<std::uint32_t>(policies_.size()));
  for (const auto& [key, policy] : policies_) wire::encode_policy(policy, out);
  w.u32(crc32(out));
  return out;
}

Result<PolicyDb, SnapshotError> PolicyDb::restore(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 13) return SnapshotError::Corrupt;
  if (!std::equal(std::begin(kSnapshotMagic), std::end(kSnapshotMagic), bytes.begin()))
    return SnapshotError::Corrupt;
  if (bytes[4] != kSnapshotVersion) return SnapshotError::Corrupt;
  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i) stored_crc = stored_crc << 8 | bytes[bytes.size() - 4 + i];
  if (crc32(bytes.first(bytes.size() - 4)) != stored_crc) return SnapshotError::Corrupt;

  ByteReader r(bytes.subspan(5, bytes.size() - 9));
  std::uint32_t count = r.u32();
  if (r.remaining() != static_cast<std::size_t>(count) * wire::kPolicySize)
    return SnapshotError::Corrupt;
  PolicyDb db;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto policy = wire::decode_policy(r.bytes(wire::kPolicySize));
    if (!policy.ok()) return SnapshotError::Corrupt;
    db.insert(*policy);
  }
  return db;
}

std::vector<SecurityPolicy> PolicyDb::all_policies() const {
  std::vector<SecurityPolicy> out;
  out.reserve(policies_.size());
  for (const auto& [key, policy] : policies_) out.push_back(policy);
  return out;
}

}  // namespace edgesec
