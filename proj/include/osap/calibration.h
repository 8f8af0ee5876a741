#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "osap/episode.h"

namespace osap {

struct CalibrationGrid {
  double quantile_min = 0.5;
  double quantile_max = 1.0;
  double quantile_step = 0.025;
  std::vector<std::size_t> l_values = {1, 2, 3, 4, 5};
  bool include_infinity = true;
  double tolerance = 0.05;  // relative to |target|
};

struct CalibrationCandidate {
  double quantile = 0.0;  // +inf for the never-default candidate
  double alpha = 0.0;
  std::size_t l_consecutive = 0;
  double qoe = 0.0;
};

struct CalibrationResult {
  Scheme scheme = Scheme::kNone;
  double alpha = 0.0;
  std::size_t l_consecutive = 0;
  double achieved_qoe = 0.0;
  double target_qoe = 0.0;
  bool within_tolerance = false;
  std::vector<CalibrationCandidate> search_log;

  double gap() const { return achieved_qoe - target_qoe; }
};

// Population of windowed score variances seen by the scheme's controller
// over never-defaulting rollouts.
std::vector<double> collect_window_variances(const SafeguardModels& models,
                                             const EpisodeConfig& cfg,
                                             std::span<const Trace> traces,
                                             const VideoManifest& manifest, std::uint64_t seed);

// Linear-interpolated quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

// Grid search over alpha (quantiles of the variance population, optionally
// +inf) and l, minimising |mean QoE - target| on the given traces. Ties go
// to larger alpha, then larger l.
CalibrationResult calibrate(const SafeguardModels& models, const EpisodeConfig& base,
                            std::span<const Trace> traces, const VideoManifest& manifest,
                            double target_qoe, const CalibrationGrid& grid, std::uint64_t seed);

std::string format_calibration(const CalibrationResult& result);
CalibrationResult parse_calibration(const std::string& text);
void save_calibration(const CalibrationResult& result, const std::filesystem::path& path);
CalibrationResult load_calibration(const std::filesystem::path& path);

}  // namespace osap
