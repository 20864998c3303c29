#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgesec/cloud.hpp"
#include "edgesec/result.hpp"
#include "edgesec/sim/metrics.hpp"
#include "edgesec/sim/scenario.hpp"

namespace edgesec::sim {

/// How one injected flow was handled by its gateway, decided at injection:
/// forwarded for cloud analysis, dropped by a local policy, or allowed by a
/// local policy / offline default.
enum class FlowCategory : std::uint8_t {
  Analyzed = 0,
  DroppedLocal = 1,
  Allowed = 2,
};

struct FlowOutcome {
  Tick injected_at = 0;
  std::size_t segment = 0;
  FlowMetadata flow;
  FlowDirection direction = FlowDirection::Outbound;
  bool attack = false;
  std::string label;
  FlowCategory category = FlowCategory::Allowed;
  std::optional<Verdict> final_verdict;
  std::optional<Tick> resolved_at;
  bool via_timeout = false;
};

struct SimResult {
  MetricsSeries metrics;
  std::vector<FlowOutcome> flows;
  std::vector<UpdateEmission> update_emissions;
  std::vector<DetectionEvent> detections;
  std::vector<BlacklistEvent> blacklist_events;
  std::string analytics_jsonl;  // one JSON object per line: detections, blacklists, per-segment summary
};

/// Deterministic end-to-end run: identical config and seed give identical
/// results, byte for byte.
Result<SimResult, std::string> run_scenario(const ScenarioConfig& config);

/// Two independent runs produce byte-identical CSV and analytics output.
bool replay_check(const ScenarioConfig& config);

}  // namespace edgesec::sim
