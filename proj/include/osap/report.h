#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace osap {

// Scheme labels used in reports.
inline constexpr const char* kVanilla = "vanilla";
inline constexpr const char* kNd = "ND";
inline constexpr const char* kAEnsemble = "A-ensemble";
inline constexpr const char* kVEnsemble = "V-ensemble";
inline constexpr const char* kBb = "BB";
inline constexpr const char* kRandom = "random";

const std::vector<std::string>& ReportSchemes();

struct EpisodeRow {
  std::string train_dist;
  std::string test_dist;
  std::string scheme;
  std::size_t trace_index = 0;
  std::string trace_id;
  std::uint64_t seed = 0;
  double total_qoe = 0.0;
  std::optional<std::size_t> default_step;
  double default_fraction = 0.0;
  std::size_t chunks = 0;

  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct CellSummary {
  std::string train_dist;
  std::string test_dist;
  std::string scheme;
  std::size_t episodes = 0;
  double mean_qoe = 0.0;
  std::optional<double> normalized;  // undefined when |BB - random| < 1e-9
  double default_rate = 0.0;         // mean fraction of chunks under default
  bool ood = false;

  friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

struct SchemeSummary {
  std::string scheme;
  std::size_t cells = 0;  // OOD cells with a defined normalized score
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;

  friend bool operator==(const SchemeSummary&, const SchemeSummary&) = default;
};

struct CdfPoint {
  std::string scheme;
  double value = 0.0;
  double fraction = 0.0;

  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

struct MatrixReport {
  std::vector<EpisodeRow> episodes;
  std::vector<CellSummary> cells;
  std::vector<SchemeSummary> schemes;
  std::vector<CdfPoint> cdf;
};

// (qoe - random) / (bb - random); nullopt when |bb - random| < 1e-9.
std::optional<double> normalize(double qoe, double random_qoe, double bb_qoe);

// Aggregates per-episode rows into cells, OOD scheme statistics and CDFs.
// Cell order follows first appearance in `episodes`.
MatrixReport summarize(std::vector<EpisodeRow> episodes);

// Writes episodes.csv, cells.csv, schemes.csv and cdf.csv.
void emit_report(const MatrixReport& report, const std::filesystem::path& out_dir);

std::vector<EpisodeRow> load_episodes(const std::filesystem::path& csv);
std::vector<CellSummary> load_cells(const std::filesystem::path& csv);
std::vector<SchemeSummary> load_schemes(const std::filesystem::path& csv);
std::vector<CdfPoint> load_cdf(const std::filesystem::path& csv);

}  // namespace osap
