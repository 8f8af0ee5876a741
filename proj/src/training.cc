#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "osap/parallel.h"
#include "osap/policies.h"

namespace osap {

namespace {

void CheckEnv(std::span<const Trace> traces, const TrainingEnv& env) {
  if (traces.empty()) throw InvalidInput("training needs at least one trace");
  if (env.manifest == nullptr) throw InvalidInput("training env has no manifest");
  if (env.features.levels != env.manifest->level_count())
    throw InvalidInput("training env: feature spec does not match the manifest ladder");
}

std::size_t SampleCategorical(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

AgentTrainResult train_agent(std::span<const Trace> traces, const TrainingEnv& env,
                             const AgentHyper& hyper, std::uint64_t init_seed) {
  CheckEnv(traces, env);
  if (!(hyper.gamma >= 0.0 && hyper.gamma < 1.0)) throw InvalidInput("agent gamma must be in [0,1)");
  const VideoManifest& manifest = *env.manifest;

  AgentTrainResult result;
  AgentParams& agent = result.params;
  agent = MakeAgent(env.features, hyper.hidden, init_seed);
  agent.reward_scale = hyper.reward_scale;

  Adam actor_opt(agent.actor.params().size());
  Adam critic_opt(agent.critic.params().size());
  std::vector<double> actor_grad(agent.actor.params().size());
  std::vector<double> critic_grad(agent.critic.params().size());

  Rng rng(hyper.data_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<ActorSample> actor_batch;
  std::vector<RegressionSample> critic_batch;
  std::vector<double> rewards;
  std::vector<std::size_t> actions;
  std::vector<FeatureVector> features;

  for (std::size_t episode = 0; episode < hyper.episodes; ++episode) {
    const Trace& trace = traces[rng() % traces.size()];
    SessionState state = start_session(trace, unit(rng) * trace.period());

    features.clear();
    actions.clear();
    rewards.clear();
    double episode_qoe = 0.0;
    while (!session_done(state, manifest)) {
      FeatureVector f = featurize(state, manifest, env.features);
      const ActionDistribution dist = actor_forward(agent, f);
      const std::size_t a = SampleCategorical(dist.probs, unit(rng));
      StepOutcome out = step(state, a, trace, manifest, env.env);
      episode_qoe += out.qoe;
      features.push_back(std::move(f));
      actions.push_back(a);
      rewards.push_back(out.qoe * hyper.reward_scale);
      state = std::move(out.next_state);
    }
    result.episode_qoe.push_back(episode_qoe);

    const std::vector<double> returns = discounted_returns(rewards, hyper.gamma);
    actor_batch.resize(features.size());
    critic_batch.resize(features.size());
    for (std::size_t t = 0; t < features.size(); ++t) {
      const double baseline = critic_forward(agent, features[t]);
      actor_batch[t] = {features[t], actions[t], returns[t] - baseline};
      critic_batch[t] = {features[t], returns[t]};
    }

    const double progress =
        hyper.episodes > 1 ? static_cast<double>(episode) / (hyper.episodes - 1) : 1.0;
    const double entropy_weight =
        hyper.entropy_weight + (hyper.entropy_weight_final - hyper.entropy_weight) * progress;

    const double actor_loss = ActorLoss(agent.actor, actor_batch, entropy_weight, actor_grad);
    const double critic_loss = RegressionLoss(agent.critic, critic_batch, critic_grad);
    if (!std::isfinite(actor_loss) || !std::isfinite(critic_loss))
      throw TrainingDiverged(fmt::format(
          "agent training diverged at episode {} (seed {}): actor loss {}, critic loss {}",
          episode, init_seed, actor_loss, critic_loss));
    ClipGradNorm(actor_grad, hyper.max_grad_norm);
    ClipGradNorm(critic_grad, hyper.max_grad_norm);
    actor_opt.Step(agent.actor.params(), actor_grad, hyper.actor_lr);
    critic_opt.Step(agent.critic.params(), critic_grad, hyper.critic_lr);
    if (!agent.AllFinite())
      throw TrainingDiverged(
          fmt::format("agent training produced non-finite weights at episode {}", episode));
  }
  return result;
}

Rollout rollout_greedy(const AgentParams& policy, const Trace& trace, double start_offset_s,
                       const TrainingEnv& env) {
  const VideoManifest& manifest = *env.manifest;
  Rollout r;
  SessionState state = start_session(trace, start_offset_s);
  while (!session_done(state, manifest)) {
    FeatureVector f = featurize(state, manifest, policy.features);
    const std::size_t a = actor_forward(policy, f).argmax();
    StepOutcome out = step(state, a, trace, manifest, env.env);
    r.features.push_back(std::move(f));
    r.rewards.push_back(out.qoe);
    state = std::move(out.next_state);
  }
  return r;
}

ValueParams train_value(const AgentParams& policy, std::span<const Trace> traces,
                        const TrainingEnv& env, const ValueHyper& hyper,
                        std::uint64_t init_seed) {
  CheckEnv(traces, env);
  if (!(hyper.gamma > 0.0 && hyper.gamma < 1.0)) throw InvalidInput("value gamma must be in (0,1)");
  if (policy.features != env.features)
    throw InvalidInput("train_value: policy feature spec differs from the training env");

  Rng data_rng(hyper.data_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RegressionSample> samples;
  for (std::size_t r = 0; r < hyper.rollouts; ++r) {
    const Trace& trace = traces[r % traces.size()];
    Rollout roll = rollout_greedy(policy, trace, unit(data_rng) * trace.period(), env);
    const auto returns = discounted_returns(roll.rewards, hyper.gamma);
    for (std::size_t t = 0; t < returns.size(); ++t)
      samples.push_back({std::move(roll.features[t]), returns[t]});
  }

  ValueParams v;
  v.init_seed = init_seed;
  v.gamma = hyper.gamma;
  v.features = env.features;
  double sq = 0.0;
  for (const auto& s : samples) sq += s.target * s.target;
  v.target_scale = std::max(1.0, std::sqrt(sq / static_cast<double>(samples.size())));
  for (auto& s : samples) s.target /= v.target_scale;
  v.net = Mlp(NetworkShape(env.features.dim(), hyper.hidden, 1), DeriveSeed(init_seed, {3}));

  Adam opt(v.net.params().size());
  std::vector<double> grad(v.net.params().size());
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<RegressionSample> batch;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[data_rng() % (i + 1)]);
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(samples[order[k]]);
      const double loss = RegressionLoss(v.net, batch, grad);
      if (!std::isfinite(loss))
        throw TrainingDiverged(fmt::format("value training diverged in epoch {} (seed {})",
                                           epoch, init_seed));
      opt.Step(v.net.params(), grad, hyper.lr);
    }
  }
  if (!v.AllFinite()) throw TrainingDiverged("value training produced non-finite weights");
  return v;
}

std::vector<AgentParams> train_agent_ensemble(std::span<const Trace> traces,
                                              const TrainingEnv& env, const AgentHyper& hyper,
                                              std::span<const std::uint64_t> seeds) {
  std::vector<AgentParams> members(seeds.size());
  ParallelFor(seeds.size(), [&](std::size_t i) {
    members[i] = train_agent(traces, env, hyper, seeds[i]).params;
  });
  return members;
}

std::vector<ValueParams> train_value_ensemble(const AgentParams& policy,
                                              std::span<const Trace> traces,
                                              const TrainingEnv& env, const ValueHyper& hyper,
                                              std::span<const std::uint64_t> seeds) {
  std::vector<ValueParams> members(seeds.size());
  ParallelFor(seeds.size(), [&](std::size_t i) {
    members[i] = train_value(policy, traces, env, hyper, seeds[i]);
  });
  return members;
}

}  // namespace osap
