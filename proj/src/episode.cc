#include "osap/episode.h"

#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace osap {

double EpisodeResult::default_fraction() const {
  if (log.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& c : log)
    if (c.decision == Decision::kDefault) ++n;
  return static_cast<double>(n) / static_cast<double>(log.size());
}

void CheckModels(const SafeguardModels& models, const EpisodeConfig& cfg,
                 const VideoManifest& manifest) {
  cfg.controller.Validate();
  const Scheme scheme = cfg.controller.scheme;
  if (cfg.policy != ActingPolicy::kLearned) {
    if (scheme != Scheme::kNone)
      throw InvalidInput("safeguards apply to the learned policy only");
    return;
  }
  if (models.acting == nullptr) throw InvalidInput("learned policy requested without an agent");
  const FeatureSpec& spec = models.acting->features;
  if (spec.levels != manifest.level_count())
    throw InvalidInput("agent was trained for a different bitrate ladder");
  switch (scheme) {
    case Scheme::kNone:
      break;
    case Scheme::kNoveltyDetection:
      if (models.detector == nullptr) throw InvalidInput("ND scheme requires a detector");
      if (models.detector->dim() != 2 * cfg.controller.k_window)
        throw InvalidInput(fmt::format("detector expects {} features, controller k = {}",
                                       models.detector->dim(), cfg.controller.k_window));
      break;
    case Scheme::kAgentEnsemble:
      if (models.agents.size() < 3) throw InvalidInput("agent ensemble needs >= 3 members");
      for (const auto& a : models.agents)
        if (a.features != spec) throw InvalidInput("agent ensemble feature specs differ");
      break;
    case Scheme::kValueEnsemble:
      if (models.values.size() < 3) throw InvalidInput("value ensemble needs >= 3 members");
      for (const auto& v : models.values)
        if (v.features != spec) throw InvalidInput("value ensemble feature spec differs");
      break;
  }
}

EpisodeResult run_episode(const SafeguardModels& models, const EpisodeConfig& cfg,
                          const Trace& trace, const VideoManifest& manifest, std::uint64_t seed) {
  CheckModels(models, cfg, manifest);
  using Clock = std::chrono::steady_clock;
  constexpr double kNoScore = std::numeric_limits<double>::quiet_NaN();

  EpisodeResult result;
  result.seed = seed;
  result.trace_id = trace.id();
  result.log.reserve(manifest.chunk_count());

  Rng rng(seed);
  ControllerState controller;
  SessionState state = start_session(trace, cfg.start_offset_s);
  const Scheme scheme = cfg.controller.scheme;
  const std::size_t levels = manifest.level_count();
  Clock::duration decision_time{};

  std::vector<ActionDistribution> dists;
  std::vector<double> values;

  while (!session_done(state, manifest)) {
    ChunkLog entry;
    entry.buffer_s = state.buffer_s;
    entry.score = kNoScore;
    std::size_t action = 0;

    const auto t0 = Clock::now();
    switch (cfg.policy) {
      case ActingPolicy::kBufferBased:
        action = bb_decide(state.buffer_s, levels, cfg.bb);
        break;
      case ActingPolicy::kRandom:
        action = random_decide(rng, levels);
        break;
      case ActingPolicy::kLearned: {
        const FeatureVector f = featurize(state, manifest, models.acting->features);
        action = actor_forward(*models.acting, f).argmax();
        Decision decision = Decision::kUseLearned;
        switch (scheme) {
          case Scheme::kNone:
            break;
          case Scheme::kNoveltyDetection: {
            const auto history = ThroughputHistory(state);
            const auto x = nd_features(history, cfg.controller.k_window);
            bool ood = false;
            if (x) {
              const OcSvmScore s = ocsvm_score(*models.detector, *x);
              entry.score = s.score;
              ood = s.ood;
            }
            decision = nd_update(controller, ood, cfg.controller);
            break;
          }
          case Scheme::kAgentEnsemble: {
            dists.clear();
            for (const auto& member : models.agents) dists.push_back(actor_forward(member, f));
            entry.score = u_pi(dists, cfg.ensemble).value;
            decision = ensemble_update(controller, entry.score, cfg.controller);
            break;
          }
          case Scheme::kValueEnsemble: {
            values.clear();
            for (const auto& member : models.values) values.push_back(value_forward(member, f));
            entry.score = u_v(values, cfg.ensemble).value;
            decision = ensemble_update(controller, entry.score, cfg.controller);
            break;
          }
        }
        entry.decision = decision;
        if (decision == Decision::kDefault) {
          action = bb_decide(state.buffer_s, levels, cfg.bb);
          if (!result.default_step) result.default_step = state.chunk_index;
        }
        break;
      }
    }
    decision_time += Clock::now() - t0;

    StepOutcome out = step(state, action, trace, manifest, cfg.env);
    entry.level = action;
    entry.bitrate_mbps = out.bitrate_mbps;
    entry.rebuffer_s = out.rebuffer_s;
    entry.qoe = out.qoe;
    result.total_qoe += out.qoe;
    result.log.push_back(entry);
    state = std::move(out.next_state);
  }
  result.mean_decision_latency_s =
      std::chrono::duration<double>(decision_time).count() / static_cast<double>(result.log.size());
  return result;
}

std::vector<EpisodeResult> run_episodes(const SafeguardModels& models, const EpisodeConfig& cfg,
                                        std::span<const Trace> traces,
                                        const VideoManifest& manifest, std::uint64_t seed) {
  std::vector<EpisodeResult> out;
  out.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i)
    out.push_back(run_episode(models, cfg, traces[i], manifest, DeriveSeed(seed, {i})));
  return out;
}

double mean_qoe(const SafeguardModels& models, const EpisodeConfig& cfg,
                std::span<const Trace> traces, const VideoManifest& manifest, std::uint64_t seed) {
  if (traces.empty()) throw InvalidInput("mean_qoe: no traces");
  double sum = 0.0;
  for (const auto& r : run_episodes(models, cfg, traces, manifest, seed)) sum += r.total_qoe;
  return sum / static_cast<double>(traces.size());
}

}  // namespace osap
