#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgesec/flow.hpp"
#include "edgesec/result.hpp"

namespace edgesec::sim {

/// Per-segment, per-tick counters. Flows are counted in exactly one of
/// analyzed (sent to the cloud), dropped_local, or allowed, so
/// received == analyzed + dropped_local + allowed per cell.
struct MetricsCell {
  std::uint64_t attack_received = 0;
  std::uint64_t attack_analyzed = 0;
  std::uint64_t attack_dropped_local = 0;
  std::uint64_t attack_allowed = 0;
  std::uint64_t benign_received = 0;
  std::uint64_t benign_analyzed = 0;
  std::uint64_t benign_dropped_local = 0;
  std::uint64_t benign_allowed = 0;
  std::uint64_t update_bytes = 0;  // update frame bytes addressed to this segment's box

  bool operator==(const MetricsCell&) const = default;
};

struct MetricsSeries {
  std::size_t segment_count = 0;
  Tick ticks = 0;
  std::vector<MetricsCell> cells;               // index = tick * segment_count + segment
  std::vector<std::uint64_t> css_requests_cum;  // cumulative requests, one per tick

  MetricsCell& at(Tick tick, std::size_t segment) {
    return cells[tick * segment_count + segment];
  }
  const MetricsCell& at(Tick tick, std::size_t segment) const {
    return cells[tick * segment_count + segment];
  }

  /// Column totals per segment over the whole run.
  MetricsCell segment_totals(std::size_t segment) const;

  bool operator==(const MetricsSeries&) const = default;
};

enum class IoError : std::uint8_t { Failure };

/// Fixed header and column order; integers only, so re-exports are
/// byte-identical.
std::string metrics_to_csv(const MetricsSeries& series);
Status<IoError> export_csv(const MetricsSeries& series, const std::string& path);

}  // namespace edgesec::sim
