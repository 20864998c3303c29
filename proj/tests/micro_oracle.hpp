#pragma once

// Independent end-to-end oracle for micro scenarios (one segment, one host,
// explicit flows): inlines policy lookup, store caching, chain evaluation,
// and policy minting with no messaging, no event queue, and none of the
// library's lookup machinery. Message timing collapses to availability
// ticks: bootstrap policies reach the gateway after one link delay, response
// policies after one round trip.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "edgesec/sim/scenario.hpp"
#include "test_helpers.hpp"

namespace edgesec::test {

struct OraclePolicy {
  int priority = 1;  // 1 normal, 2 high, 3 manual
  int order = 0;     // mint order; stands in for (issued_at, policy_id)
  MatchPattern pattern;
  Verdict verdict = Verdict::Drop;
  Tick available_at = 0;  // local visibility only; the store is immediate
};

class MicroOracle {
 public:
  explicit MicroOracle(const sim::ScenarioConfig& config) : config_(config) {
    const auto& segment = config.segments.at(0);
    for (const auto& host : segment.hosts) class_of_[host.device_id] = host.klass;
    for (const auto& [klass, names] : segment.profile.chains) chains_[klass] = names;
    full_session_ = segment.profile.full_session_routing;
    for (const auto& mb : config.middleboxes) boxes_[mb.name] = &mb;

    int order = 0;
    for (const auto& manual : segment.manual_policies)
      local_.push_back(OraclePolicy{3, order++, manual.pattern, manual.verdict, 0});
    for (const auto& baseline : config.baseline_policies) {
      int priority = baseline.priority == Priority::High ? 2 : 1;
      OraclePolicy p{priority, order++, baseline.pattern, baseline.verdict, 0};
      store_.push_back(p);
      p.available_at = config.link_delay;  // bootstrap update delivery
      local_.push_back(p);
    }
    next_order_ = order;
  }

  std::vector<Verdict> run() {
    std::vector<Verdict> verdicts;
    for (const auto& flow : config_.flows) verdicts.push_back(process(flow));
    return verdicts;
  }

 private:
  static bool ranks_below(const OraclePolicy& a, const OraclePolicy& b) {
    return std::make_tuple(a.priority, oracle_specificity(a.pattern), a.order) <
           std::make_tuple(b.priority, oracle_specificity(b.pattern), b.order);
  }

  const OraclePolicy* pick(const std::vector<OraclePolicy>& set, const FlowMetadata& flow,
                           std::optional<Tick> visible_at) const {
    const OraclePolicy* best = nullptr;
    for (const auto& p : set) {
      if (visible_at && p.available_at > *visible_at) continue;
      if (!oracle_matches(p.pattern, flow)) continue;
      if (best == nullptr || ranks_below(*best, p)) best = &p;
    }
    return best;
  }

  Verdict process(const sim::FlowSpec& spec) {
    // Gateway Pol-DB first.
    if (const OraclePolicy* hit = pick(local_, spec.flow, spec.tick)) return hit->verdict;

    // Cloud store next; a hit is cached back at the gateway one RTT later.
    Tick resolve_tick = spec.tick + 2 * config_.link_delay;
    if (const OraclePolicy* hit = pick(store_, spec.flow, std::nullopt)) {
      OraclePolicy cached = *hit;
      cached.available_at = resolve_tick;
      local_.push_back(cached);
      return hit->verdict;
    }

    // Chain evaluation at the cloud (arrival = injection + link delay).
    Tick arrival = spec.tick + config_.link_delay;
    TrafficClass klass = class_of_.at(spec.flow.device_id);
    const auto& chain = chains_.at(klass);

    Verdict verdict = Verdict::Allow;
    std::string deciding_kind;
    const sim::MiddleboxSpec* deciding_box = nullptr;
    std::optional<std::size_t> deciding_rule;
    std::optional<std::size_t> deciding_sig;
    for (const auto& name : chain) {
      const sim::MiddleboxSpec* mb = boxes_.at(name);
      Verdict stage = Verdict::Allow;
      std::optional<std::size_t> rule_idx, sig_idx;
      switch (mb->kind) {
        case MiddleboxKind::Firewall:
          stage = eval_firewall(*mb, spec.flow, klass, rule_idx);
          break;
        case MiddleboxKind::Ids:
          stage = eval_ids(*mb, spec.flow, arrival, sig_idx);
          break;
        case MiddleboxKind::Dpi:
          stage = eval_dpi(*mb, spec.label);
          break;
      }
      if (stage == Verdict::Drop && verdict == Verdict::Allow) {
        verdict = Verdict::Drop;
        deciding_kind = name;
        deciding_box = mb;
        deciding_rule = rule_idx;
        deciding_sig = sig_idx;
        if (!full_session_) break;
      }
    }

    // Mint exactly as the cloud would.
    const FlowMetadata& f = spec.flow;
    MatchPattern exact5;
    exact5.src_addr = f.src_addr;
    exact5.dst_addr = f.dst_addr;
    exact5.dst_port = f.dst_port;
    exact5.protocol = f.protocol;
    exact5.device_id = f.device_id;

    OraclePolicy response;
    std::vector<std::pair<MatchPattern, Verdict>> extras;
    if (verdict == Verdict::Allow) {
      response = OraclePolicy{1, next_order_++, exact5, Verdict::Allow, 0};
    } else if (deciding_box != nullptr && deciding_box->kind == MiddleboxKind::Firewall &&
               deciding_rule) {
      MatchPattern specific;
      specific.device_id = f.device_id;
      specific.dst_addr = f.dst_addr;
      response = OraclePolicy{1, next_order_++, specific, Verdict::Drop, 0};
      const auto& rule = deciding_box->rules[*deciding_rule];
      MatchPattern general = rule.pattern;
      general.device_id = f.device_id;
      extras.emplace_back(general, Verdict::Drop);
      if (oracle_specificity(rule.pattern) == 0) {
        std::set<std::uint32_t> allowlist(deciding_box->allowlist_extra.begin(),
                                          deciding_box->allowlist_extra.end());
        if (deciding_box->allowlist_all_servers)
          for (std::uint32_t i = 0; i < config_.server_count; ++i)
            allowlist.insert(sim::server_addr(i));
        for (std::uint32_t server : allowlist) {
          MatchPattern allow;
          allow.device_id = f.device_id;
          allow.dst_addr = server;
          extras.emplace_back(allow, Verdict::Allow);
        }
      }
    } else if (deciding_box != nullptr && deciding_box->kind == MiddleboxKind::Ids &&
               deciding_sig) {
      const auto& sig = deciding_box->signatures[*deciding_sig];
      MatchPattern pattern = sig.pattern;
      if (sig.rate) pattern.src_addr = f.src_addr;
      response = OraclePolicy{1, next_order_++, pattern, Verdict::Drop, 0};
    } else {
      response = OraclePolicy{1, next_order_++, exact5, Verdict::Drop, 0};
    }

    store_.push_back(response);
    for (const auto& [pattern, extra_verdict] : extras) {
      std::string key = pattern_key(pattern, extra_verdict);
      if (!minted_keys_.insert(key).second) continue;
      store_.push_back(OraclePolicy{1, next_order_++, pattern, extra_verdict, 0});
    }
    OraclePolicy cached = response;
    cached.available_at = resolve_tick;
    local_.push_back(cached);
    return response.verdict;
  }

  Verdict eval_firewall(const sim::MiddleboxSpec& mb, const FlowMetadata& flow,
                        const TrafficClass& klass, std::optional<std::size_t>& rule_idx) const {
    std::set<std::uint32_t> allowlist(mb.allowlist_extra.begin(), mb.allowlist_extra.end());
    if (mb.allowlist_all_servers)
      for (std::uint32_t i = 0; i < config_.server_count; ++i)
        allowlist.insert(sim::server_addr(i));
    if (allowlist.count(flow.dst_addr) > 0) return Verdict::Allow;
    for (std::size_t i = 0; i < mb.rules.size(); ++i) {
      if (mb.rules[i].klass != klass) continue;
      if (!oracle_matches(mb.rules[i].pattern, flow)) continue;
      rule_idx = i;
      return mb.rules[i].action;
    }
    return Verdict::Allow;
  }

  Verdict eval_ids(const sim::MiddleboxSpec& mb, const FlowMetadata& flow, Tick arrival,
                   std::optional<std::size_t>& sig_idx) {
    for (std::size_t i = 0; i < mb.signatures.size(); ++i) {
      const auto& sig = mb.signatures[i];
      if (!oracle_matches(sig.pattern, flow)) continue;
      if (!sig.rate) {
        sig_idx = i;
        return Verdict::Drop;
      }
      auto& ticks = ids_state_[{mb.name, i, flow.src_addr}];
      ticks.push_back(arrival);
      Tick cutoff = arrival >= sig.rate->window ? arrival - sig.rate->window + 1 : 0;
      std::size_t in_window = 0;
      for (Tick t : ticks)
        if (t >= cutoff) ++in_window;
      if (in_window > sig.rate->max_flows) {
        sig_idx = i;
        return Verdict::Drop;
      }
    }
    return Verdict::Allow;
  }

  static Verdict eval_dpi(const sim::MiddleboxSpec& mb, const std::string& label) {
    if (label.empty()) return Verdict::Allow;
    for (const auto& banned : mb.banned_labels)
      if (banned == label) return Verdict::Drop;
    return Verdict::Allow;
  }

  static std::string pattern_key(const MatchPattern& p, Verdict v) {
    auto field = [](auto opt) {
      return opt ? std::to_string(static_cast<std::uint64_t>(*opt)) : std::string("*");
    };
    return field(p.src_addr) + "/" + field(p.dst_addr) + "/" + field(p.src_port) + "/" +
           field(p.dst_port) + "/" + field(p.protocol) + "/" + field(p.device_id) + "/" +
           (v == Verdict::Allow ? "a" : "d");
  }

  const sim::ScenarioConfig& config_;
  std::map<std::uint16_t, TrafficClass> class_of_;
  std::map<TrafficClass, std::vector<std::string>> chains_;
  std::map<std::string, const sim::MiddleboxSpec*> boxes_;
  bool full_session_ = false;
  std::vector<OraclePolicy> local_;
  std::vector<OraclePolicy> store_;
  std::set<std::string> minted_keys_;
  std::map<std::tuple<std::string, std::size_t, std::uint32_t>, std::vector<Tick>> ids_state_;
  int next_order_ = 0;
};

/// Random one-segment, one-host scenario with explicit flows, for oracle
/// comparison. At most 8 flows and 4 preloaded policies.
inline sim::ScenarioConfig random_micro_scenario(Rng& rng) {
  sim::ScenarioConfig config;
  config.seed = rng.next();
  config.ticks = 12;
  config.link_delay = 1;
  config.collaboration = true;
  config.server_count = 2;
  config.server_ports = {80, 443};
  config.benign = sim::BenignSpec{0, 0, 0};

  const std::uint32_t host = sim::host_addr(0, 0);
  const std::uint32_t kS1 = sim::server_addr(0);
  const std::uint32_t kS2 = sim::server_addr(1);
  const std::vector<std::uint32_t> addr_pool = {host, kS1, kS2, 0x09090909u, 0xCB007105u};
  const std::vector<std::uint16_t> port_pool = {443, 23, 8080};

  sim::MiddleboxSpec fw;
  fw.name = "fw0";
  fw.kind = MiddleboxKind::Firewall;
  fw.allowlist_all_servers = true;
  if (rng.chance(50))
    fw.rules.push_back(sim::FirewallRuleSpec{"CCTV", MatchPattern{}, Verdict::Drop});
  if (rng.chance(30)) {
    MatchPattern p;
    p.dst_port = port_pool[rng.below(3)];
    fw.rules.push_back(sim::FirewallRuleSpec{"B", p, rng.chance(50) ? Verdict::Drop
                                                                    : Verdict::Allow});
  }
  sim::MiddleboxSpec ids;
  ids.name = "ids0";
  ids.kind = MiddleboxKind::Ids;
  {
    sim::IdsSignatureSpec sig;
    sig.pattern.protocol = 6;
    sig.pattern.dst_port = 23;
    ids.signatures.push_back(sig);
    if (rng.chance(40)) {
      sim::IdsSignatureSpec rate_sig;
      rate_sig.pattern.protocol = 6;
      rate_sig.rate = RateCondition{2, 5};
      ids.signatures.push_back(rate_sig);
    }
  }
  sim::MiddleboxSpec dpi;
  dpi.name = "dpi0";
  dpi.kind = MiddleboxKind::Dpi;
  dpi.banned_labels = {"malware-x"};
  config.middleboxes = {fw, ids, dpi};

  sim::SegmentSpec segment;
  segment.box_id = 1;
  const std::vector<TrafficClass> classes = {"A", "B", "CCTV"};
  segment.hosts.push_back(sim::HostSpec{1, classes[rng.below(3)]});
  segment.profile.share_data = true;
  segment.profile.full_session_routing = rng.chance(25);
  segment.profile.chains = {{"A", {"fw0"}},
                            {"B", {"fw0", "ids0", "dpi0"}},
                            {"CCTV", {"fw0"}}};

  auto random_pattern = [&]() {
    MatchPattern p;
    if (rng.chance(30)) p.src_addr = addr_pool[rng.below(5)];
    if (rng.chance(30)) p.dst_addr = addr_pool[rng.below(5)];
    if (rng.chance(20)) p.dst_port = port_pool[rng.below(3)];
    if (rng.chance(20)) p.protocol = rng.chance(50) ? 6 : 17;
    if (rng.chance(30)) p.device_id = 1;
    return p;
  };

  std::uint32_t manual_count = rng.below(3);
  for (std::uint32_t i = 0; i < manual_count; ++i)
    segment.manual_policies.push_back(sim::ManualPolicySpec{
        random_pattern(), rng.chance(50) ? Verdict::Allow : Verdict::Drop});
  config.segments.push_back(segment);

  std::uint32_t baseline_count = rng.below(static_cast<std::uint32_t>(5 - manual_count));
  for (std::uint32_t i = 0; i < baseline_count; ++i)
    config.baseline_policies.push_back(sim::BaselinePolicySpec{
        random_pattern(), rng.chance(50) ? Verdict::Allow : Verdict::Drop,
        rng.chance(30) ? Priority::High : Priority::Normal});

  std::uint32_t flow_count = 3 + rng.below(6);  // 3..8
  Tick tick = 0;
  std::vector<sim::FlowSpec> history;
  for (std::uint32_t i = 0; i < flow_count; ++i) {
    if (i > 0 && !rng.chance(20)) ++tick;  // occasional same-tick pairs
    sim::FlowSpec spec;
    spec.tick = tick;
    spec.segment = 0;
    if (!history.empty() && rng.chance(30)) {
      spec = history[rng.below(static_cast<std::uint32_t>(history.size()))];
      spec.tick = tick;  // replay an earlier tuple later
    } else {
      bool outbound = rng.chance(60);
      spec.direction = outbound ? FlowDirection::Outbound : FlowDirection::Inbound;
      spec.flow.src_addr = outbound ? host : addr_pool[2 + rng.below(3)];
      spec.flow.dst_addr = outbound ? addr_pool[1 + rng.below(3)] : host;
      spec.flow.src_port = static_cast<std::uint16_t>(50000 + rng.below(4));
      spec.flow.dst_port = port_pool[rng.below(3)];
      spec.flow.protocol = rng.chance(80) ? 6 : 17;
      spec.flow.device_id = 1;
      if (rng.chance(20)) spec.label = "malware-x";
    }
    history.push_back(spec);
    config.flows.push_back(spec);
  }
  config.ticks = tick + 5;
  return config;
}

}  // namespace edgesec::test
