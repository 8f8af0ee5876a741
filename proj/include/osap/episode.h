#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osap/policies.h"
#include "osap/safety_controller.h"
#include "osap/uncertainty.h"

namespace osap {

enum class ActingPolicy { kLearned, kBufferBased, kRandom };

// Models an episode may consult. The acting agent drives decisions; ensemble
// members only score the acting agent's observation stream.
struct SafeguardModels {
  const AgentParams* acting = nullptr;
  std::span<const AgentParams> agents;
  std::span<const ValueParams> values;
  const OcSvmModel* detector = nullptr;
};

struct EpisodeConfig {
  ActingPolicy policy = ActingPolicy::kLearned;
  ControllerConfig controller;
  EnsembleOptions ensemble;
  BufferBasedParams bb;
  EnvConfig env;
  double start_offset_s = 0.0;
};

struct ChunkLog {
  std::size_t level = 0;
  double bitrate_mbps = 0.0;
  double rebuffer_s = 0.0;
  double qoe = 0.0;
  Decision decision = Decision::kUseLearned;
  // NaN when the scheme produced no score at this step (none, ND warm-up).
  double score = 0.0;
  double buffer_s = 0.0;  // at decision time
};

struct EpisodeResult {
  double total_qoe = 0.0;
  std::vector<ChunkLog> log;
  std::optional<std::size_t> default_step;
  std::uint64_t seed = 0;
  std::string trace_id;
  double mean_decision_latency_s = 0.0;  // wall clock; not part of reports

  // Fraction of chunks decided by the default policy.
  double default_fraction() const;
};

EpisodeResult run_episode(const SafeguardModels& models, const EpisodeConfig& cfg,
                          const Trace& trace, const VideoManifest& manifest, std::uint64_t seed);

// Throws InvalidInput when the models cannot serve the configured scheme.
void CheckModels(const SafeguardModels& models, const EpisodeConfig& cfg,
                 const VideoManifest& manifest);

// Mean episode QoE over traces; episode i uses seed DeriveSeed(seed, {i}).
double mean_qoe(const SafeguardModels& models, const EpisodeConfig& cfg,
                std::span<const Trace> traces, const VideoManifest& manifest, std::uint64_t seed);

// Runs one episode per trace; episode i uses seed DeriveSeed(seed, {i}).
std::vector<EpisodeResult> run_episodes(const SafeguardModels& models, const EpisodeConfig& cfg,
                                        std::span<const Trace> traces,
                                        const VideoManifest& manifest, std::uint64_t seed);

}  // namespace osap
