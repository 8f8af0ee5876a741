#include "osap/safety_controller.h"

#include <fmt/format.h>

namespace osap {

void ControllerConfig::Validate() const {
  if (k_window == 0) throw InvalidInput("controller: k_window must be >= 1");
  if (l_consecutive == 0) throw InvalidInput("controller: l_consecutive must be >= 1");
  if (!(alpha >= 0.0)) throw InvalidInput("controller: alpha must be >= 0");
}

double window_variance(std::span<const double> scores) {
  if (scores.empty()) return 0.0;
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  return var / n;
}

double window_variance(const std::deque<double>& scores) {
  std::vector<double> v(scores.begin(), scores.end());
  return window_variance(std::span<const double>(v));
}

namespace {

Decision Register(ControllerState& state, bool trigger, const ControllerConfig& cfg) {
  if (cfg.sticky && state.defaulted) return Decision::kDefault;
  if (trigger)
    state.consecutive = std::min(state.consecutive + 1, cfg.l_consecutive);
  else
    state.consecutive = 0;
  const bool fire = state.consecutive >= cfg.l_consecutive;
  if (fire) state.defaulted = true;
  return fire ? Decision::kDefault : Decision::kUseLearned;
}

}  // namespace

Decision nd_update(ControllerState& state, bool ood, const ControllerConfig& cfg) {
  if (cfg.scheme != Scheme::kNoveltyDetection)
    throw InvalidInput("nd_update called for a non-ND controller");
  return Register(state, ood, cfg);
}

Decision ensemble_update(ControllerState& state, double score, const ControllerConfig& cfg) {
  if (cfg.scheme != Scheme::kAgentEnsemble && cfg.scheme != Scheme::kValueEnsemble)
    throw InvalidInput(fmt::format("ensemble_update called for scheme {}", SchemeName(cfg.scheme)));
  state.recent_scores.push_back(score);
  while (state.recent_scores.size() > cfg.k_window) state.recent_scores.pop_front();
  const bool full = state.recent_scores.size() == cfg.k_window;
  const bool trigger = full && window_variance(state.recent_scores) > cfg.alpha;
  return Register(state, trigger, cfg);
}

}  // namespace osap
