// edgesec CLI: run scenarios, validate scenario files, and compare run outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edgesec/sim/metrics.hpp"
#include "edgesec/sim/scenario.hpp"
#include "edgesec/sim/simulation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct SegmentFractions {
  std::uint64_t received = 0;
  std::uint64_t analyzed = 0;
  std::uint64_t dropped = 0;

  double analyzed_fraction() const {
    return received == 0 ? 0.0 : static_cast<double>(analyzed) / static_cast<double>(received);
  }
  double dropped_fraction() const {
    return received == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(received);
  }
};

bool file_readable(const std::string& path) { return std::ifstream(path).good(); }

int run_command(const std::string& scenario_path, const std::string& out_dir, bool no_collab,
                std::optional<std::uint64_t> seed_override) {
  if (!file_readable(scenario_path)) {
    std::cerr << "error: cannot open " << scenario_path << "\n";
    return kExitIo;
  }
  auto loaded = edgesec::sim::load_scenario_file(scenario_path);
  if (!loaded.ok()) {
    std::cerr << "error: " << loaded.error() << "\n";
    return kExitValidation;
  }
  edgesec::sim::ScenarioConfig config = *loaded;
  if (no_collab) config.collaboration = false;
  if (seed_override) config.seed = *seed_override;

  auto result = edgesec::sim::run_scenario(config);
  if (!result.ok()) {
    std::cerr << "error: " << result.error() << "\n";
    return kExitValidation;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << out_dir << "\n";
    return kExitIo;
  }
  const std::string csv_path = out_dir + "/metrics.csv";
  const std::string analytics_path = out_dir + "/analytics.jsonl";
  if (!edgesec::sim::export_csv(result->metrics, csv_path).ok()) {
    std::cerr << "error: cannot write " << csv_path << "\n";
    return kExitIo;
  }
  std::ofstream analytics(analytics_path, std::ios::binary);
  analytics << result->analytics_jsonl;
  if (!analytics) {
    std::cerr << "error: cannot write " << analytics_path << "\n";
    return kExitIo;
  }

  std::cout << "run complete: " << config.segments.size() << " segments, " << config.ticks
            << " ticks, seed " << config.seed << (config.collaboration ? "" : " (no-collab)")
            << "\n";
  for (std::size_t seg = 0; seg < config.segments.size(); ++seg) {
    auto totals = result->metrics.segment_totals(seg);
    double analyzed = totals.attack_received == 0
                          ? 0.0
                          : 100.0 * totals.attack_analyzed / totals.attack_received;
    double dropped = totals.attack_received == 0
                         ? 0.0
                         : 100.0 * totals.attack_dropped_local / totals.attack_received;
    std::printf("  segment %zu: attack received %llu, analyzed %.1f%%, dropped locally %.1f%%\n",
                seg, static_cast<unsigned long long>(totals.attack_received), analyzed, dropped);
  }
  std::cout << "wrote " << csv_path << " and " << analytics_path << "\n";
  return kExitOk;
}

int validate_command(const std::string& scenario_path) {
  if (!file_readable(scenario_path)) {
    std::cerr << "error: cannot open " << scenario_path << "\n";
    return kExitIo;
  }
  auto loaded = edgesec::sim::load_scenario_file(scenario_path);
  if (!loaded.ok()) {
    std::cerr << scenario_path << ": " << loaded.error() << "\n";
    return kExitValidation;
  }
  std::cout << scenario_path << ": ok (" << loaded->segments.size() << " segments, "
            << loaded->ticks << " ticks)\n";
  return kExitOk;
}

bool read_fractions(const std::string& path, std::map<std::size_t, SegmentFractions>& out,
                    std::string& error) {
  std::ifstream in(path);
  if (!in) {
    error = "cannot open " + path;
    return false;
  }
  std::string line;
  if (!std::getline(in, line)) {
    error = path + ": empty file";
    return false;
  }
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::vector<std::uint64_t> cols;
    while (std::getline(row, field, ',')) {
      try {
        cols.push_back(std::stoull(field));
      } catch (const std::exception&) {
        error = path + ": non-numeric field in row: " + line;
        return false;
      }
    }
    if (cols.size() < 12) {
      error = path + ": malformed row: " + line;
      return false;
    }
    SegmentFractions& f = out[cols[0]];
    f.received += cols[2];
    f.analyzed += cols[3];
    f.dropped += cols[4];
  }
  return true;
}

int compare_command(const std::string& path_a, const std::string& path_b) {
  std::map<std::size_t, SegmentFractions> a, b;
  std::string error;
  if (!read_fractions(path_a, a, error) || !read_fractions(path_b, b, error)) {
    std::cerr << "error: " << error << "\n";
    return error.rfind("cannot open", 0) == 0 ? kExitIo : kExitValidation;
  }
  std::printf("%-8s  %14s  %14s  %14s  %14s\n", "segment", "analyzed A", "analyzed B",
              "dropped A", "dropped B");
  for (const auto& [seg, fa] : a) {
    SegmentFractions fb = b.count(seg) ? b.at(seg) : SegmentFractions{};
    std::printf("%-8zu  %13.2f%%  %13.2f%%  %13.2f%%  %13.2f%%\n", seg,
                100.0 * fa.analyzed_fraction(), 100.0 * fb.analyzed_fraction(),
                100.0 * fa.dropped_fraction(), 100.0 * fb.dropped_fraction());
    std::printf("%-8s  delta analyzed %+0.2fpp, delta dropped %+0.2fpp\n", "",
                100.0 * (fb.analyzed_fraction() - fa.analyzed_fraction()),
                100.0 * (fb.dropped_fraction() - fa.dropped_fraction()));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge gateway / cloud security service simulation"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  bool no_collab = false;
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed_value = 0;

  auto* run = app.add_subcommand("run", "Run a scenario and export metrics CSV + analytics");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (default: current)");
  run->add_flag("--no-collab", no_collab, "Disable collaborative dissemination");
  auto* seed_opt = run->add_option("--seed", seed_value, "Override the scenario seed");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  std::string csv_a, csv_b;
  auto* compare = app.add_subcommand("compare", "Compare two run CSVs");
  compare->add_option("runA", csv_a, "First metrics.csv")->required();
  compare->add_option("runB", csv_b, "Second metrics.csv")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (seed_opt->count() > 0) seed_override = seed_value;
    return run_command(scenario_path, out_dir, no_collab, seed_override);
  }
  if (validate->parsed()) return validate_command(validate_path);
  if (compare->parsed()) return compare_command(csv_a, csv_b);
  return kExitValidation;
}
