#pragma once

#include <deque>
#include <limits>
#include <span>

#include "osap/uncertainty.h"

namespace osap {

struct ControllerConfig {
  Scheme scheme = Scheme::kNone;
  // ND: number of (mean, std) pairs per sample. Ensembles: variance window.
  std::size_t k_window = 5;
  std::size_t l_consecutive = 3;
  // Ensembles only: trigger when the windowed variance exceeds alpha.
  double alpha = std::numeric_limits<double>::infinity();
  bool sticky = true;

  void Validate() const;
};

enum class Decision { kUseLearned, kDefault };

struct ControllerState {
  std::deque<double> recent_scores;
  std::size_t consecutive = 0;
  bool defaulted = false;
};

// Population variance.
double window_variance(std::span<const double> scores);
double window_variance(const std::deque<double>& scores);

Decision nd_update(ControllerState& state, bool ood, const ControllerConfig& cfg);
Decision ensemble_update(ControllerState& state, double score, const ControllerConfig& cfg);

}  // namespace osap
