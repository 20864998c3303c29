#include <benchmark/benchmark.h>

#include "edgesec/policy_db.hpp"

using namespace edgesec;

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

PolicyDb build_db(std::size_t policies, std::uint64_t seed) {
  PolicyDb db;
  std::uint64_t s = seed;
  for (std::size_t i = 0; i < policies; ++i) {
    SecurityPolicy p;
    p.policy_id = i + 1;
    p.issuer = Issuer::Css;
    p.priority = (i % 16 == 0) ? Priority::High : Priority::Normal;
    p.issued_at = i;
    p.verdict = (splitmix(s) & 1) ? Verdict::Allow : Verdict::Drop;
    switch (splitmix(s) % 3) {
      case 0:  // exact 6-tuple
        p.pattern = MatchPattern::exact(FlowMetadata{
            static_cast<std::uint32_t>(splitmix(s)), static_cast<std::uint32_t>(splitmix(s)),
            static_cast<std::uint16_t>(splitmix(s)), static_cast<std::uint16_t>(splitmix(s)), 6,
            static_cast<std::uint16_t>(i % 32)});
        break;
      case 1:  // source-keyed (attacker drop shape)
        p.pattern.src_addr = static_cast<std::uint32_t>(splitmix(s) % 4096);
        break;
      default:  // device/destination rule
        p.pattern.device_id = static_cast<std::uint16_t>(i % 32);
        p.pattern.dst_addr = static_cast<std::uint32_t>(splitmix(s) % 256);
        break;
    }
    db.insert(p);
  }
  return db;
}

void BM_PolicyLookup(benchmark::State& state) {
  PolicyDb db = build_db(static_cast<std::size_t>(state.range(0)), 99);
  std::uint64_t s = 7;
  for (auto _ : state) {
    FlowMetadata flow;
    flow.src_addr = static_cast<std::uint32_t>(splitmix(s) % 4096);
    flow.dst_addr = static_cast<std::uint32_t>(splitmix(s) % 256);
    flow.src_port = static_cast<std::uint16_t>(splitmix(s));
    flow.dst_port = static_cast<std::uint16_t>(splitmix(s));
    flow.protocol = 6;
    flow.device_id = static_cast<std::uint16_t>(splitmix(s) % 32);
    benchmark::DoNotOptimize(db.lookup(flow));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PolicyLookup)->Range(64, 16384);

void BM_PolicyInsert(benchmark::State& state) {
  std::uint64_t s = 13;
  for (auto _ : state) {
    state.PauseTiming();
    PolicyDb db = build_db(1024, s++);
    state.ResumeTiming();
    SecurityPolicy p;
    p.policy_id = 1u << 20;
    p.pattern.src_addr = 1;
    db.insert(p);
    benchmark::DoNotOptimize(db.size());
  }
}
BENCHMARK(BM_PolicyInsert);

void BM_SnapshotRestore(benchmark::State& state) {
  PolicyDb db = build_db(static_cast<std::size_t>(state.range(0)), 5);
  auto bytes = db.snapshot();
  for (auto _ : state) {
    auto restored = PolicyDb::restore(bytes);
    benchmark::DoNotOptimize(restored.ok());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_SnapshotRestore)->Range(64, 4096);

}  // namespace
