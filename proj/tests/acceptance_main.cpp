// Acceptance suite: drives the full system against its headline behaviours
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "edgesec/cloud.hpp"
#include "edgesec/gateway.hpp"
#include "edgesec/sim/metrics.hpp"
#include "edgesec/sim/scenario.hpp"
#include "edgesec/sim/simulation.hpp"
#include "micro_oracle.hpp"
#include "test_helpers.hpp"

using namespace edgesec;
using namespace edgesec::sim;

namespace {

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
  g_outcomes.push_back({id, name, pass, detail});
}

ScenarioConfig load_canonical() {
  auto loaded = load_scenario_file(std::string(EDGESEC_SCENARIO_DIR) + "/canonical.json");
  if (!loaded.ok()) {
    std::fprintf(stderr, "cannot load canonical scenario: %s\n", loaded.error().c_str());
    std::exit(3);
  }
  return *loaded;
}

struct SeedRun {
  std::uint64_t seed;
  SimResult collab;
  SimResult solo;
  double collab_seconds;
};

// --- criteria 1 + 2 + 3 (share the same 10-seed runs) -------------------------

void run_criteria_1_2_3(const ScenarioConfig& canonical) {
  std::vector<SeedRun> runs;
  bool ran_ok = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ScenarioConfig with = canonical;
    with.seed = seed;
    ScenarioConfig without = with;
    without.collaboration = false;

    auto start = std::chrono::steady_clock::now();
    auto collab = run_scenario(with);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();
    auto solo = run_scenario(without);
    if (!collab.ok() || !solo.ok()) {
      ran_ok = false;
      break;
    }
    runs.push_back(SeedRun{seed, std::move(*collab), std::move(*solo), seconds});
  }

  // Criterion 1: segment 3 drops >90% locally and analyzes <10% (+-3pp),
  // under 10 seconds per run.
  bool c1 = ran_ok;
  std::string c1_detail;
  if (ran_ok) {
    double worst_dropped = 1.0, worst_analyzed = 0.0, worst_seconds = 0.0;
    for (const auto& run : runs) {
      auto totals = run.collab.metrics.segment_totals(2);
      double received = static_cast<double>(totals.attack_received);
      double dropped = totals.attack_dropped_local / received;
      double analyzed = totals.attack_analyzed / received;
      worst_dropped = std::min(worst_dropped, dropped);
      worst_analyzed = std::max(worst_analyzed, analyzed);
      worst_seconds = std::max(worst_seconds, run.collab_seconds);
      if (dropped <= 0.90 - 0.03 || analyzed >= 0.10 + 0.03 || run.collab_seconds >= 10.0)
        c1 = false;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "worst over 10 seeds: dropped %.1f%%, analyzed %.2f%%, %.2fs/run",
                  100.0 * worst_dropped, 100.0 * worst_analyzed, worst_seconds);
    c1_detail = buf;
  } else {
    c1_detail = "scenario failed to run";
    c1 = false;
  }
  record(1, "collaborative mitigation at the third segment", c1, c1_detail);

  // Criterion 2: with collaboration off every segment re-detects — analyzed
  // counts match segment 1's collaborative count within +-5% — and total
  // analysis load strictly exceeds the collaborative run.
  bool c2 = ran_ok;
  std::string c2_detail;
  if (ran_ok) {
    double worst_ratio = 0.0;
    for (const auto& run : runs) {
      double base =
          static_cast<double>(run.collab.metrics.segment_totals(0).attack_analyzed);
      std::uint64_t total_with = 0, total_without = 0;
      for (std::size_t seg = 0; seg < 3; ++seg) {
        double solo_count =
            static_cast<double>(run.solo.metrics.segment_totals(seg).attack_analyzed);
        double deviation = std::abs(solo_count - base) / base;
        worst_ratio = std::max(worst_ratio, deviation);
        if (deviation > 0.05) c2 = false;
        total_with += run.collab.metrics.segment_totals(seg).attack_analyzed;
        total_without += run.solo.metrics.segment_totals(seg).attack_analyzed;
      }
      if (total_without <= total_with) c2 = false;
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "worst per-segment deviation %.2f%% of segment-1 load",
                  100.0 * worst_ratio);
    c2_detail = buf;
  } else {
    c2_detail = "scenario failed to run";
    c2 = false;
  }
  record(2, "disabling collaboration forces per-segment re-detection", c2, c2_detail);

  // Criterion 3: per (box, policy), at most one update emission, ever.
  bool c3 = ran_ok;
  std::uint64_t emissions_checked = 0;
  if (ran_ok) {
    for (const auto& run : runs) {
      for (const SimResult* result : {&run.collab, &run.solo}) {
        std::set<std::pair<std::uint32_t, std::uint64_t>> seen;
        for (const auto& e : result->update_emissions) {
          ++emissions_checked;
          if (!seen.insert({e.box_id, e.policy_id}).second) c3 = false;
        }
      }
    }
  } else {
    c3 = false;
  }
  record(3, "no policy is ever re-sent to a box", c3,
         std::to_string(emissions_checked) + " update emissions audited, zero repeats");
}

// --- criterion 4: wire budget ---------------------------------------------------

void run_criterion_4() {
  static_assert(wire::kAnalysisRequestSize == 27);
  static_assert(wire::kAnalysisRequestSize < wire::kUplinkBudgetBytes);
  bool pass = true;
  test::Rng rng{404};
  for (int i = 0; i < 10000; ++i) {
    AnalysisRequest req;
    req.box_id = static_cast<std::uint32_t>(rng.next());
    req.request_id = static_cast<std::uint32_t>(rng.next());
    req.metadata = test::random_flow(rng);
    auto bytes = wire::encode_request(req);
    if (bytes.size() != 27) pass = false;
    auto decoded = wire::decode_request(bytes);
    if (!decoded.ok() || !(*decoded == req)) pass = false;
  }
  record(4, "analysis requests are exactly 27 bytes, round-trip clean", pass,
         "10000 random requests");
}

// --- criterion 5: cached flows produce zero cloud messages ------------------------

void run_criterion_5() {
  trust::CertAuthority ca(500);
  constexpr std::uint32_t kCssId = 0xFFFFFF01;
  auto css = ca.register_subject(kCssId, 0).value();
  auto box = ca.register_subject(1, 0).value();

  MiddleboxManager manager;
  FirewallConfig fw;
  for (std::uint32_t i = 0; i < 8; ++i) fw.allowlist.insert(server_addr(i));
  InstanceId fw_id = manager.add_instance(MiddleboxKind::Firewall, fw);

  CloudConfig cloud_config;
  cloud_config.css_id = kCssId;
  CloudService cloud(cloud_config, css.keys, css.cert, &ca, std::move(manager));
  UserProfile profile;
  profile.box_id = 1;
  profile.chains["A"] = {fw_id};
  for (std::uint16_t d = 1; d <= 4; ++d) profile.class_map[d] = "A";
  cloud.register_box(1, box.cert, profile, 0);

  Gateway gateway(GatewayConfig{1, kCssId, Verdict::Drop, Verdict::Allow, 2}, box.keys, box.cert,
                  ca.root_public_key());

  test::Rng rng{505};
  std::vector<FlowMetadata> flows;
  for (int i = 0; i < 1000; ++i) {
    FlowMetadata f;
    f.src_addr = host_addr(0, rng.below(3));
    f.dst_addr = server_addr(rng.below(8));
    f.src_port = static_cast<std::uint16_t>(49152 + rng.below(16384));
    f.dst_port = rng.chance(50) ? 80 : 443;
    f.protocol = 6;
    f.device_id = static_cast<std::uint16_t>(1 + rng.below(4));
    flows.push_back(f);
  }

  // First pass: warm every policy through the full request/response path.
  Tick now = 0;
  for (const auto& flow : flows) {
    auto decision = gateway.process_flow(flow, FlowDirection::Outbound, now);
    if (std::holds_alternative<CloudPending>(decision)) {
      for (const auto& frame : gateway.take_outbox()) cloud.handle_frame(1, frame, now);
      for (const auto& emission : cloud.take_outbox())
        (void)gateway.on_response(emission.frame, now, kCssId);
    }
    ++now;
  }
  gateway.take_outbox();

  // Replay: every flow is cached, so the gateway must stay silent.
  bool pass = true;
  std::size_t messages = 0;
  for (const auto& flow : flows) {
    auto decision = gateway.process_flow(flow, FlowDirection::Outbound, now++);
    if (!std::holds_alternative<Verdict>(decision)) pass = false;
    messages += gateway.outbox_size();
    gateway.take_outbox();
  }
  if (messages != 0) pass = false;
  record(5, "re-processing cached flows emits zero cloud messages", pass,
         "1000-flow replay, " + std::to_string(messages) + " messages");
}

// --- criterion 6: the security gate ------------------------------------------------

void run_criterion_6() {
  bool pass = true;
  std::string detail;

  // (a) every foreign-key update is rejected and reported.
  {
    trust::CertAuthority ca(600);
    constexpr std::uint32_t kCssId = 0xFFFFFF01;
    ca.register_subject(kCssId, 0).value();
    auto box = ca.register_subject(1, 0).value();
    Gateway gateway(GatewayConfig{1, kCssId, Verdict::Drop, Verdict::Allow, 2}, box.keys,
                    box.cert, ca.root_public_key());

    trust::CertAuthority rogue_ca(601);
    auto rogue = rogue_ca.register_subject(kCssId, 0).value();
    int rejected = 0, reported = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
      PolicyUpdate update;
      update.seq = i + 1;
      update.tier = UpdateTier::High;
      SecurityPolicy p;
      p.policy_id = i + 1;
      p.pattern.src_addr = static_cast<std::uint32_t>(i);
      p.verdict = Verdict::Allow;
      update.policies.push_back(p);
      auto frame = wire::seal_frame(wire::MessageType::PolicyUpdate,
                                    wire::encode_update_payload(update), rogue.cert,
                                    rogue.keys.secret_key);
      auto applied = gateway.receive_update(frame, i, 0xBAD0 + static_cast<std::uint32_t>(i));
      if (!applied.ok()) ++rejected;
      for (const auto& out : gateway.take_outbox()) {
        auto opened = wire::open_frame(out);
        if (opened.ok() && opened->type == wire::MessageType::RogueSourceReport) ++reported;
      }
    }
    if (rejected != 100 || reported != 100 || gateway.db().size() != 0) pass = false;
    detail = std::to_string(rejected) + "/100 foreign updates rejected, " +
             std::to_string(reported) + " reports queued";
  }

  // (b) a box replaying one request past the threshold is blacklisted and
  // then receives nothing at all.
  {
    trust::CertAuthority ca(602);
    constexpr std::uint32_t kCssId = 0xFFFFFF01;
    auto css = ca.register_subject(kCssId, 0).value();
    auto rogue_box = ca.register_subject(1, 0).value();
    auto honest_box = ca.register_subject(2, 0).value();

    MiddleboxManager manager;
    InstanceId fw_id = manager.add_instance(MiddleboxKind::Firewall, FirewallConfig{});
    CloudConfig config;
    config.css_id = kCssId;
    config.low_activity_windows = {{0, 1000}};
    CloudService cloud(config, css.keys, css.cert, &ca, std::move(manager));
    UserProfile profile;
    profile.box_id = 1;
    profile.chains["A"] = {fw_id};
    profile.class_map[1] = "A";
    cloud.register_box(1, rogue_box.cert, profile, 0);
    profile.box_id = 2;
    cloud.register_box(2, honest_box.cert, profile, 0);
    cloud.take_outbox();

    AnalysisRequest req;
    req.box_id = 1;
    req.request_id = 77;
    req.metadata = FlowMetadata{1, 2, 3, 4, 6, 1};
    auto frame = wire::seal_frame(wire::MessageType::AnalysisRequest, wire::encode_request(req),
                                  rogue_box.cert, rogue_box.keys.secret_key);
    for (Tick t = 0; t < 6; ++t) cloud.handle_frame(1, frame, t);
    if (!cloud.is_blacklisted(1)) pass = false;
    cloud.take_outbox();

    // Further requests: silence. Further updates: only the honest box.
    cloud.handle_frame(1, frame, 10);
    cloud.preload_policy(MatchPattern{.dst_port = 9}, Verdict::Drop, Priority::High, 11);
    cloud.end_tick(11);
    std::size_t to_rogue = 0, to_honest = 0;
    for (const auto& emission : cloud.take_outbox())
      (emission.box_id == 1 ? to_rogue : to_honest) += 1;
    if (to_rogue != 0 || to_honest == 0) pass = false;
    detail += "; rogue box blacklisted, 0 frames after eviction";
  }
  record(6, "foreign updates rejected and rogue boxes silenced", pass, detail);
}

// --- criterion 7: failover transparency ----------------------------------------------

void run_criterion_7(const ScenarioConfig& canonical) {
  ScenarioConfig clean = canonical;
  clean.seed = 42;
  ScenarioConfig failing = clean;
  failing.failures.push_back(FailureSpec{40, "cloud-primary"});
  auto a = run_scenario(clean);
  auto b = run_scenario(failing);
  bool pass = a.ok() && b.ok() && metrics_to_csv(a->metrics) == metrics_to_csv(b->metrics) &&
              a->analytics_jsonl == b->analytics_jsonl;
  record(7, "mid-run primary failover leaves the metrics byte-identical", pass,
         "failure injected at tick 40");
}

// --- criterion 8: oracle equivalence ---------------------------------------------------

void run_criterion_8() {
  test::Rng rng{800};
  int scenarios_ok = 0;
  bool pass = true;
  for (int round = 0; round < 200; ++round) {
    ScenarioConfig config = test::random_micro_scenario(rng);
    auto result = run_scenario(config);
    if (!result.ok()) {
      pass = false;
      break;
    }
    test::MicroOracle oracle(config);
    auto expected = oracle.run();
    if (result->flows.size() != expected.size()) {
      pass = false;
      break;
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (!result->flows[i].final_verdict.has_value() ||
          *result->flows[i].final_verdict != expected[i]) {
        pass = false;
        break;
      }
    }
    if (!pass) break;
    ++scenarios_ok;
  }
  record(8, "per-flow verdicts equal the brute-force oracle", pass,
         std::to_string(scenarios_ok) + "/200 micro scenarios exact");
}

// --- criterion 9: determinism across the scenario suite ----------------------------------

void run_criterion_9(const ScenarioConfig& canonical) {
  bool pass = true;
  std::vector<std::string> checked;

  ScenarioConfig base = canonical;
  base.seed = 42;
  pass = pass && replay_check(base);
  checked.push_back("canonical");

  ScenarioConfig solo = base;
  solo.collaboration = false;
  pass = pass && replay_check(solo);
  checked.push_back("no-collab");

  ScenarioConfig failover = base;
  failover.failures.push_back(FailureSpec{40, "cloud-primary"});
  pass = pass && replay_check(failover);
  checked.push_back("failover");

  ScenarioConfig quiet = base;
  quiet.attack.zombies = 0;
  quiet.attack.schedule.clear();
  pass = pass && replay_check(quiet);
  checked.push_back("no-attack");

  auto micro = load_scenario_file(std::string(EDGESEC_SCENARIO_DIR) + "/micro_example.json");
  if (micro.ok()) {
    pass = pass && replay_check(*micro);
    checked.push_back("micro");
  } else {
    pass = false;
  }

  std::string detail;
  for (const auto& name : checked) detail += (detail.empty() ? "" : ", ") + name;
  record(9, "every suite scenario replays byte-identically", pass, detail);
}

}  // namespace

int main() {
  ScenarioConfig canonical = load_canonical();

  run_criteria_1_2_3(canonical);
  run_criterion_4();
  run_criterion_5();
  run_criterion_6();
  run_criterion_7(canonical);
  run_criterion_8();
  run_criterion_9(canonical);

  int failures = 0;
  for (const auto& outcome : g_outcomes) {
    std::printf("%s — criterion %d: %s (%s)\n", outcome.pass ? "PASS" : "FAIL", outcome.id,
                outcome.name.c_str(), outcome.detail.c_str());
    if (!outcome.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(g_outcomes.size()) - failures,
              g_outcomes.size());
  return failures;
}
