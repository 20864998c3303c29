#include "edgesec/middlebox.hpp"

#include <algorithm>

namespace edgesec {

FirewallDecision eval_firewall(const FirewallConfig& fw, const FlowContext& ctx) {
  if (fw.allowlist.count(ctx.flow.dst_addr) > 0)
    return {Verdict::Allow, FirewallBasis::AllowlistHit, std::nullopt};
  // First match wins; deny-unknown is a trailing catch-all Drop rule.
  for (std::size_t i = 0; i < fw.rules.size(); ++i) {
    const FirewallRule& rule = fw.rules[i];
    if (rule.klass != ctx.klass) continue;
    if (matches(rule.pattern, ctx.flow))
      return {rule.action, FirewallBasis::RuleMatch, i};
  }
  return {Verdict::Allow, FirewallBasis::Unconstrained, std::nullopt};
}

IdsDecision eval_ids(const IdsConfig& ids, IdsState& state, const FlowContext& ctx) {
  for (std::size_t i = 0; i < ids.signatures.size(); ++i) {
    const IdsSignature& sig = ids.signatures[i];
    if (!matches(sig.pattern, ctx.flow)) continue;
    if (!sig.rate) return {Verdict::Drop, i};
    auto& ticks = state.recent[{i, ctx.flow.src_addr}];
    ticks.push_back(ctx.now);
    Tick cutoff = ctx.now >= sig.rate->window ? ctx.now - sig.rate->window + 1 : 0;
    while (!ticks.empty() && ticks.front() < cutoff) ticks.pop_front();
    if (ticks.size() > sig.rate->max_flows) return {Verdict::Drop, i};
  }
  return {Verdict::Allow, std::nullopt};
}

Verdict eval_dpi(const DpiConfig& dpi, const FlowContext& ctx) {
  if (!ctx.label.empty() && dpi.banned_labels.count(ctx.label) > 0) return Verdict::Drop;
  return Verdict::Allow;
}

InstanceId MiddleboxManager::add_instance(MiddleboxKind kind, MiddleboxConfig config,
                                          std::optional<InstanceId> replica_of) {
  Instance inst;
  inst.id = next_id_++;
  inst.kind = kind;
  inst.config = std::move(config);
  inst.replica_of = replica_of;
  inst.in_pool = !replica_of.has_value();
  if (replica_of) {
    // A replica mirrors its primary's config and current state.
    auto it = instances_.find(*replica_of);
    if (it != instances_.end()) {
      inst.config = it->second.config;
      inst.state = it->second.state;
      inst.kind = it->second.kind;
    }
  }
  InstanceId id = inst.id;
  instances_.emplace(id, std::move(inst));
  return id;
}

bool MiddleboxManager::same_group(const Instance& a, const Instance& b) const {
  return a.kind == b.kind && a.config == b.config;
}

Result<InstanceId, AssignError> MiddleboxManager::assign(InstanceId chain_element) {
  auto it = instances_.find(chain_element);
  if (it == instances_.end()) return AssignError::NoInstance;
  const Instance& want = it->second;
  const Instance* best = nullptr;
  for (const auto& [id, inst] : instances_) {
    if (!inst.live || !inst.in_pool) continue;
    if (!same_group(inst, want)) continue;
    if (best == nullptr || inst.load < best->load) best = &inst;  // map order breaks ties low
  }
  if (best == nullptr) return AssignError::NoInstance;
  InstanceId chosen = best->id;
  instances_.at(chosen).load += 1;
  return chosen;
}

Verdict MiddleboxManager::evaluate(Instance& inst, const FlowContext& ctx, StageResult& out) {
  out.instance = inst.id;
  Verdict verdict = Verdict::Allow;
  if (auto* fw = std::get_if<FirewallConfig>(&inst.config)) {
    FirewallDecision d = eval_firewall(*fw, ctx);
    verdict = d.verdict;
    out.fw_basis = d.basis;
    out.fw_rule_index = d.rule_index;
  } else if (auto* ids = std::get_if<IdsConfig>(&inst.config)) {
    IdsDecision d = eval_ids(*ids, inst.state, ctx);
    verdict = d.verdict;
    out.ids_signature_index = d.signature_index;
    sync_replicas(inst);  // copy-on-mutation keeps swaps transparent
  } else if (auto* dpi = std::get_if<DpiConfig>(&inst.config)) {
    verdict = eval_dpi(*dpi, ctx);
  }
  out.verdict = verdict;
  return verdict;
}

void MiddleboxManager::sync_replicas(const Instance& primary) {
  for (auto& [id, inst] : instances_) {
    if (inst.replica_of && *inst.replica_of == primary.id) inst.state = primary.state;
  }
}

Result<ChainVerdict, ChainError> MiddleboxManager::eval_chain(const ServiceChain& chain,
                                                              const FlowContext& ctx,
                                                              bool full_session) {
  ChainVerdict result;
  result.verdict = Verdict::Allow;
  for (InstanceId element : chain) {
    auto assigned = assign(element);
    if (!assigned.ok()) return ChainError::InstanceUnavailable;
    Instance& inst = instances_.at(*assigned);
    StageResult stage;
    Verdict v = evaluate(inst, ctx, stage);
    result.stages.push_back(stage);
    if (v == Verdict::Drop && result.verdict == Verdict::Allow) {
      result.verdict = Verdict::Drop;
      result.deciding_instance = stage.instance;
      if (!full_session) return result;  // first Drop short-circuits
    }
  }
  if (result.verdict == Verdict::Allow && !result.stages.empty())
    result.deciding_instance = result.stages.back().instance;
  return result;
}

Result<InstanceId, SwapError> MiddleboxManager::fail_and_swap(InstanceId failed) {
  auto it = instances_.find(failed);
  if (it == instances_.end()) return SwapError::NoReplica;
  Instance* replica = nullptr;
  for (auto& [id, inst] : instances_) {
    if (inst.live && inst.replica_of && *inst.replica_of == failed) {
      replica = &inst;
      break;  // lowest-id replica promotes
    }
  }
  if (replica == nullptr) return SwapError::NoReplica;
  it->second.live = false;
  it->second.in_pool = false;
  replica->in_pool = true;
  replica->load = it->second.load;  // inherit position in the balancing order
  return replica->id;
}

bool MiddleboxManager::is_live(InstanceId id) const {
  auto it = instances_.find(id);
  return it != instances_.end() && it->second.live;
}

std::uint64_t MiddleboxManager::load_of(InstanceId id) const {
  auto it = instances_.find(id);
  return it == instances_.end() ? 0 : it->second.load;
}

std::optional<MiddleboxKind> MiddleboxManager::kind_of(InstanceId id) const {
  auto it = instances_.find(id);
  if (it == instances_.end()) return std::nullopt;
  return it->second.kind;
}

const MiddleboxConfig* MiddleboxManager::config_of(InstanceId id) const {
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : &it->second.config;
}

}  // namespace edgesec
