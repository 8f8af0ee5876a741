#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "osap/calibration.h"
#include "osap/config.h"
#include "osap/episode.h"
#include "osap/report.h"

namespace osap {

// Progress sink for long-running steps; may be empty.
using Logger = std::function<void(const std::string&)>;

VideoManifest build_manifest(const ExperimentConfig& cfg);

// Synthetic traces are sampled with seed DeriveSeed(cfg.seed, {HashName(name), i});
// file-backed distributions load their directory.
std::vector<Trace> build_traces(const ExperimentConfig& cfg, const NamedDistribution& dist);
DatasetSplit build_split(const ExperimentConfig& cfg, const NamedDistribution& dist);

TrainingEnv MakeTrainingEnv(const ExperimentConfig& cfg, const VideoManifest& manifest);

// ND features of greedy `policy` rollouts (buffer-based when null) over
// `traces`, one sample per chunk once enough history exists. When more than
// `max_samples` are collected, a seeded uniform subsample is kept (0 = keep all).
std::vector<NdFeature> collect_nd_samples(std::span<const Trace> traces,
                                          const VideoManifest& manifest, const EnvConfig& env,
                                          const BufferBasedParams& bb, const AgentParams* policy,
                                          std::size_t k, std::size_t rollouts_per_trace,
                                          std::size_t max_samples, std::uint64_t seed);

// Everything trained on one distribution. agents[0] is the acting policy;
// the value ensemble estimates its returns.
struct ModelBundle {
  std::string dist;
  std::vector<AgentParams> agents;
  std::vector<ValueParams> values;
  OcSvmModel detector;
  CalibrationResult calibration_a;
  CalibrationResult calibration_v;
  double nd_target_qoe = 0.0;  // ND-safeguarded QoE on validation traces
};

// Scheme labels from report.h: vanilla, ND, A-ensemble, V-ensemble, BB, random.
EpisodeConfig scheme_config(const ExperimentConfig& cfg, const std::string& scheme,
                            const ModelBundle* bundle);
SafeguardModels bundle_models(const ModelBundle& bundle);

ModelBundle train_agents_and_values(const ExperimentConfig& cfg, const NamedDistribution& dist,
                                    const DatasetSplit& split, const VideoManifest& manifest,
                                    const Logger& log = {});
void fit_detector(const ExperimentConfig& cfg, const DatasetSplit& split,
                  const VideoManifest& manifest, ModelBundle& bundle, const Logger& log = {});
// Sets the ND target on validation traces, then calibrates A and V to it.
void calibrate_bundle(const ExperimentConfig& cfg, const DatasetSplit& split,
                      const VideoManifest& manifest, ModelBundle& bundle,
                      const Logger& log = {});

// All of the above.
ModelBundle train_bundle(const ExperimentConfig& cfg, const NamedDistribution& dist,
                         const DatasetSplit& split, const VideoManifest& manifest,
                         const Logger& log = {});

// Layout: agent_<i>.txt, value_<i>.txt, detector.txt, calibration_A.txt,
// calibration_V.txt.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir, const std::string& dist);

// Runs the first `cfg.test_traces_per_cell` test traces of `test_split`
// under each scheme. Episode seeds are
// DeriveSeed(cfg.seed, {HashName(train), HashName(test), HashName(scheme), i}).
std::vector<EpisodeRow> run_cell(const ExperimentConfig& cfg, const ModelBundle& bundle,
                                 const std::string& test_dist,
                                 std::span<const Trace> test_traces,
                                 const VideoManifest& manifest,
                                 const std::vector<std::string>& schemes,
                                 double* mean_latency_s = nullptr);

struct MatrixRequest {
  std::vector<std::string> train_dists;  // empty = all
  std::vector<std::string> test_dists;   // empty = all
  std::vector<std::string> schemes;      // empty = all
};

struct MatrixRun {
  MatrixReport report;
  double mean_decision_latency_s = 0.0;
};

// Trains (cfg.train or no models_dir) or loads bundles, then evaluates every
// (train, test) cell. Trained bundles are saved when models_dir is set.
MatrixRun run_matrix(const ExperimentConfig& cfg, const MatrixRequest& request,
                     const Logger& log = {});

}  // namespace osap
