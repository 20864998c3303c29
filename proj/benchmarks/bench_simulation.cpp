#include <benchmark/benchmark.h>

#include "edgesec/middlebox.hpp"
#include "edgesec/sim/scenario.hpp"
#include "edgesec/sim/simulation.hpp"

using namespace edgesec;
using namespace edgesec::sim;

namespace {

void BM_ChainEval(benchmark::State& state) {
  MiddleboxManager manager;
  FirewallConfig fw;
  for (std::uint32_t i = 0; i < 32; ++i) fw.allowlist.insert(server_addr(i));
  InstanceId fw_id = manager.add_instance(MiddleboxKind::Firewall, fw);
  IdsConfig ids;
  IdsSignature sig;
  sig.pattern.protocol = 6;
  sig.pattern.dst_port = 23;
  ids.signatures.push_back(sig);
  InstanceId ids_id = manager.add_instance(MiddleboxKind::Ids, ids);
  InstanceId dpi_id = manager.add_instance(MiddleboxKind::Dpi, DpiConfig{});
  ServiceChain chain = {fw_id, ids_id, dpi_id};

  FlowContext ctx;
  ctx.flow = {0x0A000101, 0x08000001, 50000, 443, 6, 1};
  ctx.klass = "B";
  for (auto _ : state) {
    ctx.now++;
    auto verdict = manager.eval_chain(chain, ctx);
    benchmark::DoNotOptimize(verdict.ok());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ChainEval);

/// Canonical-shape run scaled by tick count: end-to-end cost per simulated
/// tick with 3 segments, 15 zombies, and benign load.
void BM_ScenarioRun(benchmark::State& state) {
  ScenarioConfig config;
  config.seed = 11;
  config.ticks = static_cast<Tick>(state.range(0));
  config.low_activity_windows = {{config.ticks / 2, config.ticks}};
  config.server_count = 32;

  MiddleboxSpec fw;
  fw.name = "fw0";
  fw.kind = MiddleboxKind::Firewall;
  fw.allowlist_all_servers = true;
  config.middleboxes.push_back(fw);
  for (std::uint32_t box = 1; box <= 3; ++box) {
    SegmentSpec seg;
    seg.box_id = box;
    seg.hosts = {HostSpec{1, "A"}, HostSpec{2, "A"}, HostSpec{3, "A"}};
    seg.profile.chains = {{"A", {"fw0"}}};
    config.segments.push_back(seg);
  }
  config.benign = BenignSpec{1, 20, 1};
  config.attack.zombies = 15;
  config.attack.ports_per_zombie = 1000;
  config.attack.probes_per_tick = 5;
  config.attack.schedule = {AttackScheduleEntry{0, 0, std::nullopt},
                            AttackScheduleEntry{1, config.ticks / 3, std::nullopt},
                            AttackScheduleEntry{2, 2 * config.ticks / 3, std::nullopt}};

  for (auto _ : state) {
    auto result = run_scenario(config);
    benchmark::DoNotOptimize(result.ok());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(config.ticks));
}
BENCHMARK(BM_ScenarioRun)->Arg(60)->Arg(240)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
