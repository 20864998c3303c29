#include "doctest.h"

#include <algorithm>

#include "edgesec/middlebox.hpp"
#include "test_helpers.hpp"

using namespace edgesec;

namespace {

FlowContext ctx_for(FlowMetadata flow, TrafficClass klass = "A", std::string label = "",
                    Tick now = 0) {
  return FlowContext{flow, std::move(klass), std::move(label), now};
}

}  // namespace

TEST_CASE("firewall allows allowlisted destinations") {
  FirewallConfig fw;
  fw.allowlist = {0x08000001, 0x08000002};
  FlowMetadata flow;
  flow.dst_addr = 0x08000002;
  auto d = eval_firewall(fw, ctx_for(flow));
  CHECK(d.verdict == Verdict::Allow);
  CHECK(d.basis == FirewallBasis::AllowlistHit);
}

TEST_CASE("deny-unknown catch-all drops camera traffic to unlisted servers") {
  FirewallConfig fw;
  fw.allowlist = {0x08000001};
  fw.rules.push_back(FirewallRule{"CCTV", MatchPattern{}, Verdict::Drop});

  FlowMetadata unknown;
  unknown.dst_addr = 0x09090909;
  auto d = eval_firewall(fw, ctx_for(unknown, "CCTV"));
  CHECK(d.verdict == Verdict::Drop);
  CHECK(d.basis == FirewallBasis::RuleMatch);

  // The same destination is fine for an unconstrained class.
  auto other = eval_firewall(fw, ctx_for(unknown, "A"));
  CHECK(other.verdict == Verdict::Allow);
  CHECK(other.basis == FirewallBasis::Unconstrained);
}

TEST_CASE("firewall equals the linear first-match oracle on random rules") {
  test::Rng rng{30};
  const std::vector<TrafficClass> classes = {"A", "B"};
  for (int round = 0; round < 20; ++round) {
    FirewallConfig fw;
    for (int i = 0; i < 5; ++i)
      if (rng.chance(60)) fw.allowlist.insert(rng.below(4));
    for (int i = 0; i < 100; ++i)
      fw.rules.push_back(FirewallRule{classes[rng.below(2)], test::small_pattern(rng),
                                      rng.chance(50) ? Verdict::Allow : Verdict::Drop});
    for (int i = 0; i < 100; ++i) {
      FlowMetadata flow = test::small_flow(rng);
      TrafficClass klass = classes[rng.below(2)];
      auto got = eval_firewall(fw, ctx_for(flow, klass));

      Verdict expected = Verdict::Allow;
      if (fw.allowlist.count(flow.dst_addr) == 0) {
        for (const auto& rule : fw.rules) {
          if (rule.klass != klass) continue;
          if (!test::oracle_matches(rule.pattern, flow)) continue;
          expected = rule.action;
          break;
        }
      }
      CHECK(got.verdict == expected);
    }
  }
}

TEST_CASE("ids with no signatures allows") {
  IdsConfig ids;
  IdsState state;
  test::Rng rng{31};
  CHECK(eval_ids(ids, state, ctx_for(test::small_flow(rng))).verdict == Verdict::Allow);
}

TEST_CASE("telnet signature drops telnet flows only") {
  IdsConfig ids;
  IdsSignature sig;
  sig.pattern.protocol = 6;
  sig.pattern.dst_port = 23;
  ids.signatures.push_back(sig);
  IdsState state;

  FlowMetadata telnet;
  telnet.protocol = 6;
  telnet.dst_port = 23;
  CHECK(eval_ids(ids, state, ctx_for(telnet)).verdict == Verdict::Drop);

  FlowMetadata web;
  web.protocol = 6;
  web.dst_port = 80;
  CHECK(eval_ids(ids, state, ctx_for(web)).verdict == Verdict::Allow);
}

TEST_CASE("rate signature fires on the sixth flow inside the window") {
  IdsConfig ids;
  IdsSignature sig;
  sig.pattern.protocol = 6;
  sig.rate = RateCondition{5, 10};  // more than 5 flows per 10 ticks from one source
  ids.signatures.push_back(sig);
  IdsState state;

  FlowMetadata flow;
  flow.protocol = 6;
  flow.src_addr = 0xC0000001;
  for (int i = 0; i < 5; ++i)
    CHECK(eval_ids(ids, state, ctx_for(flow, "A", "", i)).verdict == Verdict::Allow);
  CHECK(eval_ids(ids, state, ctx_for(flow, "A", "", 5)).verdict == Verdict::Drop);

  // A different source has its own counter.
  FlowMetadata other = flow;
  other.src_addr = 0xC0000002;
  CHECK(eval_ids(ids, state, ctx_for(other, "A", "", 5)).verdict == Verdict::Allow);
}

TEST_CASE("rate decisions match a replayed-log oracle") {
  IdsConfig ids;
  IdsSignature sig;
  sig.pattern.protocol = 6;
  sig.rate = RateCondition{3, 6};
  ids.signatures.push_back(sig);
  IdsState state;

  test::Rng rng{32};
  std::vector<std::pair<Tick, std::uint32_t>> log;  // (tick, src)
  Tick now = 0;
  for (int i = 0; i < 200; ++i) {
    now += rng.below(3);
    std::uint32_t src = rng.below(3);
    FlowMetadata flow;
    flow.protocol = 6;
    flow.src_addr = src;
    log.emplace_back(now, src);
    auto got = eval_ids(ids, state, ctx_for(flow, "A", "", now));

    // Oracle: count this source's flows within the trailing window.
    std::size_t in_window = 0;
    Tick cutoff = now >= 6 ? now - 6 + 1 : 0;
    for (const auto& [t, s] : log)
      if (s == src && t >= cutoff) ++in_window;
    Verdict expected = in_window > 3 ? Verdict::Drop : Verdict::Allow;
    CHECK(got.verdict == expected);
  }
}

TEST_CASE("dpi is set membership over labels") {
  DpiConfig dpi;
  dpi.banned_labels = {"malware-x", "exfil"};
  FlowMetadata flow;
  CHECK(eval_dpi(dpi, ctx_for(flow)) == Verdict::Allow);  // unlabeled
  CHECK(eval_dpi(dpi, ctx_for(flow, "A", "malware-x")) == Verdict::Drop);
  CHECK(eval_dpi(dpi, ctx_for(flow, "A", "benign-video")) == Verdict::Allow);

  test::Rng rng{33};
  const std::vector<std::string> labels = {"", "malware-x", "exfil", "update", "telemetry"};
  for (int i = 0; i < 200; ++i) {
    const std::string& label = labels[rng.below(5)];
    Verdict expected = !label.empty() && dpi.banned_labels.count(label) > 0 ? Verdict::Drop
                                                                            : Verdict::Allow;
    CHECK(eval_dpi(dpi, ctx_for(flow, "A", label)) == expected);
  }
}

TEST_CASE("per-class chains diverge: a stricter chain may drop what a lax one allows") {
  MiddleboxManager manager;
  FirewallConfig fw;  // unconstrained firewall
  InstanceId fw_id = manager.add_instance(MiddleboxKind::Firewall, fw);
  IdsConfig ids;
  IdsSignature sig;
  sig.pattern.dst_port = 23;
  ids.signatures.push_back(sig);
  InstanceId ids_id = manager.add_instance(MiddleboxKind::Ids, ids);
  DpiConfig dpi;
  dpi.banned_labels = {"malware-x"};
  InstanceId dpi_id = manager.add_instance(MiddleboxKind::Dpi, dpi);

  ServiceChain class_a = {fw_id};
  ServiceChain class_b = {fw_id, ids_id, dpi_id};

  FlowMetadata telnet;
  telnet.dst_port = 23;
  auto a = manager.eval_chain(class_a, ctx_for(telnet, "A"));
  auto b = manager.eval_chain(class_b, ctx_for(telnet, "B"));
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(a->verdict == Verdict::Allow);
  CHECK(b->verdict == Verdict::Drop);
  CHECK(b->deciding_instance == ids_id);
}

TEST_CASE("all-allow chain decides at the last stage") {
  MiddleboxManager manager;
  InstanceId fw_id = manager.add_instance(MiddleboxKind::Firewall, FirewallConfig{});
  InstanceId dpi_id = manager.add_instance(MiddleboxKind::Dpi, DpiConfig{});
  auto verdict = manager.eval_chain({fw_id, dpi_id}, ctx_for(FlowMetadata{}));
  REQUIRE(verdict.ok());
  CHECK(verdict->verdict == Verdict::Allow);
  CHECK(verdict->deciding_instance == dpi_id);
  CHECK(verdict->stages.size() == 2);
}

TEST_CASE("short-circuit stops evaluation; full-session mode does not") {
  MiddleboxManager manager;
  FirewallConfig fw;
  fw.rules.push_back(FirewallRule{"A", MatchPattern{}, Verdict::Drop});
  InstanceId fw_id = manager.add_instance(MiddleboxKind::Firewall, fw);
  InstanceId dpi_id = manager.add_instance(MiddleboxKind::Dpi, DpiConfig{});

  auto sc = manager.eval_chain({fw_id, dpi_id}, ctx_for(FlowMetadata{}, "A"));
  REQUIRE(sc.ok());
  CHECK(sc->verdict == Verdict::Drop);
  CHECK(sc->stages.size() == 1);          // dpi never invoked
  CHECK(manager.load_of(dpi_id) == 0);    // counter proves it

  auto full = manager.eval_chain({fw_id, dpi_id}, ctx_for(FlowMetadata{}, "A"), true);
  REQUIRE(full.ok());
  CHECK(full->verdict == Verdict::Drop);
  CHECK(full->deciding_instance == fw_id);  // first drop still decides
  CHECK(full->stages.size() == 2);
  CHECK(manager.load_of(dpi_id) == 1);
}

TEST_CASE("short-circuit verdict equals full evaluation verdict") {
  test::Rng rng{34};
  for (int round = 0; round < 50; ++round) {
    MiddleboxManager manager;
    FirewallConfig fw;
    for (int i = 0; i < 3; ++i)
      fw.rules.push_back(FirewallRule{"A", test::small_pattern(rng),
                                      rng.chance(50) ? Verdict::Allow : Verdict::Drop});
    InstanceId fw_id = manager.add_instance(MiddleboxKind::Firewall, fw);
    IdsConfig ids;
    IdsSignature sig;
    sig.pattern = test::small_pattern(rng);
    ids.signatures.push_back(sig);
    InstanceId ids_id = manager.add_instance(MiddleboxKind::Ids, ids);

    // Two managers so stateful stages see the same history in both modes.
    MiddleboxManager manager2;
    manager2.add_instance(MiddleboxKind::Firewall, fw);
    manager2.add_instance(MiddleboxKind::Ids, ids);

    FlowMetadata flow = test::small_flow(rng);
    auto sc = manager.eval_chain({fw_id, ids_id}, ctx_for(flow, "A"));
    auto full = manager2.eval_chain({fw_id, ids_id}, ctx_for(flow, "A"), true);
    REQUIRE(sc.ok());
    REQUIRE(full.ok());
    CHECK(sc->verdict == full->verdict);
  }
}

TEST_CASE("assignment balances load across identical instances") {
  MiddleboxManager manager;
  InstanceId a = manager.add_instance(MiddleboxKind::Firewall, FirewallConfig{});
  InstanceId b = manager.add_instance(MiddleboxKind::Firewall, FirewallConfig{});
  InstanceId c = manager.add_instance(MiddleboxKind::Firewall, FirewallConfig{});

  // Idle pool: ties break to the lowest id.
  auto first = manager.assign(a);
  REQUIRE(first.ok());
  CHECK(*first == a);

  // Preload uneven load, the lighter instance is chosen.
  auto second = manager.assign(a);
  auto third = manager.assign(a);
  REQUIRE(second.ok());
  REQUIRE(third.ok());
  CHECK(*second == b);
  CHECK(*third == c);

  for (int i = 0; i < 997; ++i) CHECK(manager.assign(a).ok());
  std::uint64_t loads[3] = {manager.load_of(a), manager.load_of(b), manager.load_of(c)};
  std::uint64_t lo = std::min({loads[0], loads[1], loads[2]});
  std::uint64_t hi = std::max({loads[0], loads[1], loads[2]});
  CHECK(loads[0] + loads[1] + loads[2] == 1000);
  CHECK(hi - lo <= 1);
}

TEST_CASE("assignment on a missing kind fails") {
  MiddleboxManager manager;
  CHECK_FALSE(manager.assign(99).ok());
}

TEST_CASE("failing a stateless firewall swaps without verdict changes") {
  MiddleboxManager manager;
  FirewallConfig fw;
  fw.allowlist = {0x08000001};
  fw.rules.push_back(FirewallRule{"CCTV", MatchPattern{}, Verdict::Drop});
  InstanceId primary = manager.add_instance(MiddleboxKind::Firewall, fw);
  InstanceId replica = manager.add_instance(MiddleboxKind::Firewall, fw, primary);

  FlowMetadata flow;
  flow.dst_addr = 0x09090909;
  auto before = manager.eval_chain({primary}, ctx_for(flow, "CCTV"));
  REQUIRE(before.ok());

  auto swapped = manager.fail_and_swap(primary);
  REQUIRE(swapped.ok());
  CHECK(*swapped == replica);
  CHECK_FALSE(manager.is_live(primary));

  auto after = manager.eval_chain({primary}, ctx_for(flow, "CCTV"));
  REQUIRE(after.ok());
  CHECK(after->verdict == before->verdict);
  CHECK(after->stages[0].instance == replica);
}

TEST_CASE("failing a stateful ids mid-window keeps the rate trigger index") {
  // Dual run: one uninterrupted manager, one with a swap after the third flow.
  IdsConfig ids;
  IdsSignature sig;
  sig.pattern.protocol = 6;
  sig.rate = RateCondition{4, 20};
  ids.signatures.push_back(sig);

  MiddleboxManager uninterrupted;
  InstanceId u_id = uninterrupted.add_instance(MiddleboxKind::Ids, ids);
  MiddleboxManager swapped;
  InstanceId s_id = swapped.add_instance(MiddleboxKind::Ids, ids);
  swapped.add_instance(MiddleboxKind::Ids, ids, s_id);

  FlowMetadata flow;
  flow.protocol = 6;
  flow.src_addr = 0xC0000001;
  std::vector<Verdict> a, b;
  for (int i = 0; i < 8; ++i) {
    if (i == 3) REQUIRE(swapped.fail_and_swap(s_id).ok());
    auto va = uninterrupted.eval_chain({u_id}, ctx_for(flow, "A", "", i));
    auto vb = swapped.eval_chain({s_id}, ctx_for(flow, "A", "", i));
    REQUIRE(va.ok());
    REQUIRE(vb.ok());
    a.push_back(va->verdict);
    b.push_back(vb->verdict);
  }
  CHECK(a == b);
  CHECK(std::count(a.begin(), a.end(), Verdict::Drop) > 0);  // the trigger occurred
}

TEST_CASE("failing an instance without a replica reports NoReplica") {
  MiddleboxManager manager;
  InstanceId solo = manager.add_instance(MiddleboxKind::Dpi, DpiConfig{});
  auto swapped = manager.fail_and_swap(solo);
  REQUIRE_FALSE(swapped.ok());
  CHECK(swapped.error() == SwapError::NoReplica);
}
