#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "osap/abr_env.h"
#include "osap/nn.h"
#include "osap/rng.h"

namespace osap {

// ---------------------------------------------------------------------------
// Baselines

struct BufferBasedParams {
  double reservoir_s = 5.0;
  double cushion_s = 10.0;
};

// Lowest level at or below the reservoir, highest at or above
// reservoir + cushion, otherwise floor(fraction * levels).
std::size_t bb_decide(double buffer_s, std::size_t level_count, const BufferBasedParams& bb);

std::size_t random_decide(Rng& rng, std::size_t level_count);

// ---------------------------------------------------------------------------
// Observation features

struct FeatureSpec {
  static constexpr int kVersion = 1;

  int version = kVersion;
  std::size_t history = 8;  // m: past throughput / download-time samples
  std::size_t levels = 6;
  double buffer_norm_s = 10.0;
  double throughput_norm_mbps = 4.3;
  double download_norm_s = 10.0;

  // buffer, last rate, m throughputs, m download times, remaining fraction.
  std::size_t dim() const { return 3 + 2 * history; }

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

FeatureSpec DefaultFeatureSpec(const VideoManifest& manifest);

using FeatureVector = std::vector<double>;

// History fields are ordered oldest to newest and zero-padded at the front.
FeatureVector featurize(const SessionState& state, const VideoManifest& manifest,
                        const FeatureSpec& spec);

// ---------------------------------------------------------------------------
// Learned policy and value functions

struct ActionDistribution {
  std::vector<double> probs;

  std::size_t argmax() const;
  bool valid(double tol = 1e-9) const;
};

struct AgentParams {
  Mlp actor;
  Mlp critic;
  std::uint64_t init_seed = 0;
  FeatureSpec features;
  // critic outputs are in units of (qoe * reward_scale).
  double reward_scale = 1.0;

  bool AllFinite() const { return actor.AllFinite() && critic.AllFinite(); }
  friend bool operator==(const AgentParams&, const AgentParams&) = default;
};

struct ValueParams {
  Mlp net;
  std::uint64_t init_seed = 0;
  double gamma = 0.99;
  FeatureSpec features;
  // value_forward returns net output * target_scale (QoE units).
  double target_scale = 1.0;

  bool AllFinite() const { return net.AllFinite(); }
  friend bool operator==(const ValueParams&, const ValueParams&) = default;
};

std::vector<std::size_t> NetworkShape(std::size_t input_dim, std::span<const std::size_t> hidden,
                                      std::size_t output_dim);

AgentParams MakeAgent(const FeatureSpec& spec, std::span<const std::size_t> hidden,
                      std::uint64_t init_seed);

ActionDistribution actor_forward(const AgentParams& params, std::span<const double> features);
double critic_forward(const AgentParams& params, std::span<const double> features);
double value_forward(const ValueParams& params, std::span<const double> features);

// ---------------------------------------------------------------------------
// Training

struct AgentHyper {
  std::vector<std::size_t> hidden = {32, 32};
  double actor_lr = 1e-3;
  double critic_lr = 3e-3;
  double gamma = 0.99;
  double entropy_weight = 0.5;
  double entropy_weight_final = 0.01;  // linear decay over training
  std::size_t episodes = 400;
  double reward_scale = 0.1;
  double max_grad_norm = 5.0;
  // Seeds the episode schedule and action sampling; ensemble members share
  // it and differ only in init_seed.
  std::uint64_t data_seed = 7;
};

struct TrainingEnv {
  const VideoManifest* manifest = nullptr;
  EnvConfig env;
  FeatureSpec features;
};

struct AgentTrainResult {
  AgentParams params;
  std::vector<double> episode_qoe;  // training curve
};

// Raised when a loss becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Advantage actor-critic with entropy regularisation; one update per
// episode. Each episode starts at a random offset of a random training trace.
AgentTrainResult train_agent(std::span<const Trace> traces, const TrainingEnv& env,
                             const AgentHyper& hyper, std::uint64_t init_seed);

// Discounted returns G_t = r_t + gamma * G_{t+1}, G_T = 0.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

struct ValueHyper {
  std::vector<std::size_t> hidden = {32, 32};
  double lr = 3e-3;
  double gamma = 0.99;
  std::size_t rollouts = 60;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::uint64_t data_seed = 11;
};

// One greedy rollout of the policy: features and QoE rewards per chunk.
struct Rollout {
  std::vector<FeatureVector> features;
  std::vector<double> rewards;
};

Rollout rollout_greedy(const AgentParams& policy, const Trace& trace, double start_offset_s,
                       const TrainingEnv& env);

// Regresses a value network on discounted returns of greedy rollouts of
// `policy` over the training traces. Rollouts depend only on the data, so
// members of an ensemble differ only in their initialisation.
ValueParams train_value(const AgentParams& policy, std::span<const Trace> traces,
                        const TrainingEnv& env, const ValueHyper& hyper,
                        std::uint64_t init_seed);

std::vector<AgentParams> train_agent_ensemble(std::span<const Trace> traces,
                                              const TrainingEnv& env, const AgentHyper& hyper,
                                              std::span<const std::uint64_t> seeds);

std::vector<ValueParams> train_value_ensemble(const AgentParams& policy,
                                              std::span<const Trace> traces,
                                              const TrainingEnv& env, const ValueHyper& hyper,
                                              std::span<const std::uint64_t> seeds);

// ---------------------------------------------------------------------------
// Serialization (text; layouts are listed in README.md)

std::string format_agent(const AgentParams& params);
AgentParams parse_agent(const std::string& text);
void save_agent(const AgentParams& params, const std::filesystem::path& path);
AgentParams load_agent(const std::filesystem::path& path);

std::string format_value(const ValueParams& params);
ValueParams parse_value(const std::string& text);
void save_value(const ValueParams& params, const std::filesystem::path& path);
ValueParams load_value(const std::filesystem::path& path);

}  // namespace osap
