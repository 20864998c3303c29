#include "edgesec/sim/metrics.hpp"

#include <fstream>
#include <sstream>

namespace edgesec::sim {

MetricsCell MetricsSeries::segment_totals(std::size_t segment) const {
  MetricsCell total;
  for (Tick t = 0; t < ticks; ++t) {
    const MetricsCell& c = at(t, segment);
    total.attack_received += c.attack_received;
    total.attack_analyzed += c.attack_analyzed;
    total.attack_dropped_local += c.attack_dropped_local;
    total.attack_allowed += c.attack_allowed;
    total.benign_received += c.benign_received;
    total.benign_analyzed += c.benign_analyzed;
    total.benign_dropped_local += c.benign_dropped_local;
    total.benign_allowed += c.benign_allowed;
    total.update_bytes += c.update_bytes;
  }
  return total;
}

std::string metrics_to_csv(const MetricsSeries& series) {
  std::ostringstream out;
  out << "segment,tick,attack_received,attack_analyzed,attack_dropped_local,attack_allowed,"
         "benign_received,benign_analyzed,benign_dropped_local,benign_allowed,"
         "css_requests_total,update_bytes\n";
  for (std::size_t seg = 0; seg < series.segment_count; ++seg) {
    for (Tick t = 0; t < series.ticks; ++t) {
      const MetricsCell& c = series.at(t, seg);
      out << seg << ',' << t << ',' << c.attack_received << ',' << c.attack_analyzed << ','
          << c.attack_dropped_local << ',' << c.attack_allowed << ',' << c.benign_received << ','
          << c.benign_analyzed << ',' << c.benign_dropped_local << ',' << c.benign_allowed << ','
          << series.css_requests_cum[t] << ',' << c.update_bytes << '\n';
    }
  }
  return out.str();
}

Status<IoError> export_csv(const MetricsSeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return IoError::Failure;
  out << metrics_to_csv(series);
  out.flush();
  if (!out) return IoError::Failure;
  return std::monostate{};
}

}  // namespace edgesec::sim
