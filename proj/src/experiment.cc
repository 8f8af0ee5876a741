#include "osap/experiment.h"

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "osap/parallel.h"
#include "osap/rng.h"

namespace osap {

namespace {

void Log(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::uint64_t DistKey(const std::string& name) { return HashName(name); }

std::vector<std::uint64_t> MemberSeeds(const ExperimentConfig& cfg, const std::string& dist,
                                       const char* kind) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.ensemble_size; ++i)
    seeds.push_back(DeriveSeed(cfg.seed, {DistKey(dist), HashName(kind), i}));
  return seeds;
}

}  // namespace

VideoManifest build_manifest(const ExperimentConfig& cfg) {
  if (cfg.manifest_path) return load_manifest(*cfg.manifest_path);
  return synth_manifest(cfg.ladder, cfg.video);
}

std::vector<Trace> build_traces(const ExperimentConfig& cfg, const NamedDistribution& dist) {
  if (dist.spec.kind == DistributionKind::kFileBacked) return load_trace_dir(dist.spec.path);
  std::vector<Trace> traces;
  traces.reserve(cfg.traces_per_distribution);
  for (std::size_t i = 0; i < cfg.traces_per_distribution; ++i)
    traces.push_back(sample_synthetic(dist.spec, cfg.trace_steps,
                                      DeriveSeed(cfg.seed, {DistKey(dist.name), i}), cfg.synthetic));
  return traces;
}

DatasetSplit build_split(const ExperimentConfig& cfg, const NamedDistribution& dist) {
  return split_dataset(build_traces(cfg, dist), cfg.train_fraction, cfg.validation_fraction,
                       DeriveSeed(cfg.seed, {DistKey(dist.name), HashName("split")}));
}

TrainingEnv MakeTrainingEnv(const ExperimentConfig& cfg, const VideoManifest& manifest) {
  TrainingEnv env;
  env.manifest = &manifest;
  env.env = cfg.env;
  env.features = DefaultFeatureSpec(manifest);
  return env;
}

std::vector<NdFeature> collect_nd_samples(std::span<const Trace> traces,
                                          const VideoManifest& manifest, const EnvConfig& env,
                                          const BufferBasedParams& bb, const AgentParams* policy,
                                          std::size_t k, std::size_t rollouts_per_trace,
                                          std::size_t max_samples, std::uint64_t seed) {
  std::vector<NdFeature> samples;
  Rng rng(seed);
  for (const auto& trace : traces) {
    for (std::size_t r = 0; r < rollouts_per_trace; ++r) {
      // The first rollout starts at the trace origin, later ones at random offsets.
      const double offset =
          r == 0 ? 0.0 : std::uniform_real_distribution<double>(0.0, trace.period())(rng);
      SessionState state = start_session(trace, offset);
      while (!session_done(state, manifest)) {
        // Sampled at decision time, where the controller scores at run time.
        if (auto f = nd_features(ThroughputHistory(state), k)) samples.push_back(std::move(*f));
        const std::size_t level =
            policy ? actor_forward(*policy, featurize(state, manifest, policy->features)).argmax()
                   : bb_decide(state.buffer_s, manifest.level_count(), bb);
        state = step(state, level, trace, manifest, env).next_state;
      }
    }
  }
  if (max_samples > 0 && samples.size() > max_samples) {
    // Partial Fisher-Yates, then restore collection order.
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < max_samples; ++i) {
      const std::size_t j = i + rng() % (idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(max_samples);
    std::sort(idx.begin(), idx.end());
    std::vector<NdFeature> kept;
    kept.reserve(max_samples);
    for (std::size_t i : idx) kept.push_back(std::move(samples[i]));
    samples = std::move(kept);
  }
  return samples;
}

SafeguardModels bundle_models(const ModelBundle& bundle) {
  SafeguardModels m;
  m.acting = bundle.agents.empty() ? nullptr : &bundle.agents.front();
  m.agents = bundle.agents;
  m.values = bundle.values;
  m.detector = bundle.detector.dim() > 0 ? &bundle.detector : nullptr;
  return m;
}

EpisodeConfig scheme_config(const ExperimentConfig& cfg, const std::string& scheme,
                            const ModelBundle* bundle) {
  EpisodeConfig ec;
  ec.env = cfg.env;
  ec.bb = cfg.bb;
  ec.ensemble = cfg.ensemble;
  ec.controller.sticky = cfg.sticky;
  if (scheme == kBb) {
    ec.policy = ActingPolicy::kBufferBased;
  } else if (scheme == kRandom) {
    ec.policy = ActingPolicy::kRandom;
  } else if (scheme == kVanilla) {
    ec.policy = ActingPolicy::kLearned;
  } else if (scheme == kNd) {
    ec.controller.scheme = Scheme::kNoveltyDetection;
    ec.controller.k_window = cfg.nd_k;
    ec.controller.l_consecutive = cfg.nd_l;
  } else if (scheme == kAEnsemble || scheme == kVEnsemble) {
    const bool a = scheme == kAEnsemble;
    ec.controller.scheme = a ? Scheme::kAgentEnsemble : Scheme::kValueEnsemble;
    ec.controller.k_window = cfg.ensemble_k;
    if (bundle) {
      const CalibrationResult& cal = a ? bundle->calibration_a : bundle->calibration_v;
      ec.controller.alpha = cal.alpha;
      ec.controller.l_consecutive = cal.l_consecutive;
    }
  } else {
    throw InvalidInput(fmt::format("unknown scheme '{}'", scheme));
  }
  return ec;
}

ModelBundle train_agents_and_values(const ExperimentConfig& cfg, const NamedDistribution& dist,
                                    const DatasetSplit& split, const VideoManifest& manifest,
                                    const Logger& log) {
  ModelBundle bundle;
  bundle.dist = dist.name;
  const TrainingEnv env = MakeTrainingEnv(cfg, manifest);
  Log(log, fmt::format("[{}] training {} agents on {} traces", dist.name, cfg.ensemble_size,
                       split.train.size()));
  const auto agent_seeds = MemberSeeds(cfg, dist.name, "agent");
  bundle.agents = train_agent_ensemble(split.train, env, cfg.agent, agent_seeds);
  Log(log, fmt::format("[{}] training {} value networks", dist.name, cfg.ensemble_size));
  const auto value_seeds = MemberSeeds(cfg, dist.name, "value");
  bundle.values = train_value_ensemble(bundle.agents.front(), split.train, env, cfg.value,
                                       value_seeds);
  return bundle;
}

void fit_detector(const ExperimentConfig& cfg, const DatasetSplit& split,
                  const VideoManifest& manifest, ModelBundle& bundle, const Logger& log) {
  const auto samples = collect_nd_samples(
      split.train, manifest, cfg.env, cfg.bb,
      cfg.nd_sample_policy == "agent" && !bundle.agents.empty() ? &bundle.agents.front() : nullptr,
      cfg.nd_k, cfg.nd_rollouts_per_trace,
      cfg.nd_max_samples, DeriveSeed(cfg.seed, {DistKey(bundle.dist), HashName("nd")}));
  if (samples.empty())
    throw InvalidInput(fmt::format("[{}] no ND samples; video too short for k = {}", bundle.dist,
                                   cfg.nd_k));
  Log(log, fmt::format("[{}] fitting OC-SVM on {} samples", bundle.dist, samples.size()));
  bundle.detector = fit_ocsvm(samples, cfg.nd, cfg.nd_k);
}

void calibrate_bundle(const ExperimentConfig& cfg, const DatasetSplit& split,
                      const VideoManifest& manifest, ModelBundle& bundle, const Logger& log) {
  const SafeguardModels models = bundle_models(bundle);
  const std::uint64_t seed = DeriveSeed(cfg.seed, {DistKey(bundle.dist), HashName("calibration")});
  bundle.nd_target_qoe =
      mean_qoe(models, scheme_config(cfg, kNd, nullptr), split.validation, manifest, seed);
  Log(log, fmt::format("[{}] ND validation QoE {:.3f}", bundle.dist, bundle.nd_target_qoe));
  for (const char* scheme : {kAEnsemble, kVEnsemble}) {
    auto result = calibrate(models, scheme_config(cfg, scheme, nullptr), split.validation,
                            manifest, bundle.nd_target_qoe, cfg.calibration, seed);
    Log(log, fmt::format("[{}] {} alpha={} l={} QoE {:.3f}{}", bundle.dist, scheme, result.alpha,
                         result.l_consecutive, result.achieved_qoe,
                         result.within_tolerance ? "" : " (outside tolerance)"));
    (scheme == kAEnsemble ? bundle.calibration_a : bundle.calibration_v) = std::move(result);
  }
}

ModelBundle train_bundle(const ExperimentConfig& cfg, const NamedDistribution& dist,
                         const DatasetSplit& split, const VideoManifest& manifest,
                         const Logger& log) {
  ModelBundle bundle = train_agents_and_values(cfg, dist, split, manifest, log);
  fit_detector(cfg, split, manifest, bundle, log);
  calibrate_bundle(cfg, split, manifest, bundle, log);
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < bundle.agents.size(); ++i)
    save_agent(bundle.agents[i], dir / fmt::format("agent_{}.txt", i));
  for (std::size_t i = 0; i < bundle.values.size(); ++i)
    save_value(bundle.values[i], dir / fmt::format("value_{}.txt", i));
  save_ocsvm(bundle.detector, dir / "detector.txt");
  save_calibration(bundle.calibration_a, dir / "calibration_A.txt");
  save_calibration(bundle.calibration_v, dir / "calibration_V.txt");
}

ModelBundle load_bundle(const std::filesystem::path& dir, const std::string& dist) {
  ModelBundle bundle;
  bundle.dist = dist;
  for (std::size_t i = 0; std::filesystem::exists(dir / fmt::format("agent_{}.txt", i)); ++i)
    bundle.agents.push_back(load_agent(dir / fmt::format("agent_{}.txt", i)));
  for (std::size_t i = 0; std::filesystem::exists(dir / fmt::format("value_{}.txt", i)); ++i)
    bundle.values.push_back(load_value(dir / fmt::format("value_{}.txt", i)));
  if (bundle.agents.empty()) throw InvalidInput("no agents in " + dir.string());
  bundle.detector = load_ocsvm(dir / "detector.txt");
  bundle.calibration_a = load_calibration(dir / "calibration_A.txt");
  bundle.calibration_v = load_calibration(dir / "calibration_V.txt");
  bundle.nd_target_qoe = bundle.calibration_a.target_qoe;
  return bundle;
}

std::vector<EpisodeRow> run_cell(const ExperimentConfig& cfg, const ModelBundle& bundle,
                                 const std::string& test_dist,
                                 std::span<const Trace> test_traces,
                                 const VideoManifest& manifest,
                                 const std::vector<std::string>& schemes,
                                 double* mean_latency_s) {
  const std::size_t n = std::min(cfg.test_traces_per_cell, test_traces.size());
  const SafeguardModels models = bundle_models(bundle);
  std::vector<EpisodeRow> rows(schemes.size() * n);
  std::vector<double> latency(rows.size(), 0.0);
  std::vector<EpisodeConfig> configs;
  for (const auto& s : schemes) configs.push_back(scheme_config(cfg, s, &bundle));

  ParallelFor(
      rows.size(),
      [&](std::size_t job) {
        const std::size_t s = job / n;
        const std::size_t i = job % n;
        const std::uint64_t seed = DeriveSeed(
            cfg.seed, {DistKey(bundle.dist), DistKey(test_dist), HashName(schemes[s]), i});
        const EpisodeResult r = run_episode(models, configs[s], test_traces[i], manifest, seed);
        EpisodeRow& row = rows[job];
        row.train_dist = bundle.dist;
        row.test_dist = test_dist;
        row.scheme = schemes[s];
        row.trace_index = i;
        row.trace_id = r.trace_id;
        row.seed = seed;
        row.total_qoe = r.total_qoe;
        row.default_step = r.default_step;
        row.default_fraction = r.default_fraction();
        row.chunks = r.log.size();
        latency[job] = r.mean_decision_latency_s;
      },
      cfg.threads);

  if (mean_latency_s) {
    *mean_latency_s = latency.empty()
                          ? 0.0
                          : std::accumulate(latency.begin(), latency.end(), 0.0) /
                                static_cast<double>(latency.size());
  }
  return rows;
}

MatrixRun run_matrix(const ExperimentConfig& cfg, const MatrixRequest& request,
                     const Logger& log) {
  auto names = [&](const std::vector<std::string>& requested) {
    if (!requested.empty()) {
      for (const auto& n : requested) cfg.Distribution(n);
      return requested;
    }
    std::vector<std::string> all;
    for (const auto& d : cfg.distributions) all.push_back(d.name);
    return all;
  };
  const auto train_names = names(request.train_dists);
  const auto test_names = names(request.test_dists);
  const auto schemes = request.schemes.empty() ? ReportSchemes() : request.schemes;
  for (const auto& s : schemes) scheme_config(cfg, s, nullptr);

  const VideoManifest manifest = build_manifest(cfg);

  std::map<std::string, DatasetSplit> splits;
  auto split_of = [&](const std::string& name) -> const DatasetSplit& {
    auto it = splits.find(name);
    if (it == splits.end()) it = splits.emplace(name, build_split(cfg, cfg.Distribution(name))).first;
    return it->second;
  };

  const bool train = cfg.train || !cfg.models_dir;
  std::vector<ModelBundle> bundles;
  for (const auto& name : train_names) {
    if (train) {
      bundles.push_back(train_bundle(cfg, cfg.Distribution(name), split_of(name), manifest, log));
      if (cfg.models_dir) save_bundle(bundles.back(), *cfg.models_dir / name);
    } else {
      bundles.push_back(load_bundle(*cfg.models_dir / name, name));
    }
  }

  MatrixRun run;
  std::vector<EpisodeRow> rows;
  double latency_sum = 0.0;
  std::size_t latency_cells = 0;
  for (const auto& bundle : bundles) {
    for (const auto& test : test_names) {
      Log(log, fmt::format("evaluating train={} test={}", bundle.dist, test));
      double latency = 0.0;
      auto cell = run_cell(cfg, bundle, test, split_of(test).test, manifest, schemes, &latency);
      rows.insert(rows.end(), std::make_move_iterator(cell.begin()),
                  std::make_move_iterator(cell.end()));
      latency_sum += latency;
      ++latency_cells;
    }
  }
  run.report = summarize(std::move(rows));
  run.mean_decision_latency_s = latency_cells ? latency_sum / static_cast<double>(latency_cells) : 0.0;
  return run;
}

}  // namespace osap
