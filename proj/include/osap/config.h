#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osap/abr_env.h"
#include "osap/calibration.h"
#include "osap/policies.h"
#include "osap/trace.h"
#include "osap/uncertainty.h"

namespace osap {

struct NamedDistribution {
  std::string name;
  DistributionSpec spec;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0 = hardware concurrency

  // [data]
  std::vector<NamedDistribution> distributions;
  std::size_t traces_per_distribution = 100;
  std::size_t trace_steps = 2000;
  SyntheticOptions synthetic;
  double train_fraction = 0.7;
  double validation_fraction = 0.3;
  std::size_t test_traces_per_cell = 50;

  // [video]
  std::vector<BitrateLevel> ladder = DefaultLadder();
  ManifestOptions video;
  std::optional<std::filesystem::path> manifest_path;

  // [env], [bb]
  EnvConfig env;
  BufferBasedParams bb;

  // [agent], [value], [ensemble]
  AgentHyper agent;
  ValueHyper value;
  std::size_t ensemble_size = 5;
  EnsembleOptions ensemble;
  std::size_t ensemble_k = 5;

  // [nd]
  OcSvmOptions nd;
  std::size_t nd_k = 30;
  std::size_t nd_l = 3;
  std::size_t nd_max_samples = 2000;
  std::size_t nd_rollouts_per_trace = 1;
  // Policy whose rollouts on training traces supply detector samples:
  // "bb" (policy-agnostic default) or "agent" (the acting member).
  std::string nd_sample_policy = "bb";

  // [controller], [calibration]
  bool sticky = true;
  CalibrationGrid calibration;

  // [paths]
  std::optional<std::filesystem::path> models_dir;
  bool train = false;

  const NamedDistribution& Distribution(const std::string& name) const;
};

// Four synthetic distributions with default settings.
ExperimentConfig DefaultExperimentConfig();

// INI-style "key = value" with [section] headers; unknown keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

}  // namespace osap
