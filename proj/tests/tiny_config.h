#pragma once

#include <filesystem>
#include <fstream>
#include <string>

namespace osap::testing {

// Small enough to train and evaluate a 2 x 2 matrix in a few seconds.
inline constexpr const char* kTinyConfig = R"([experiment]
seed = 5
threads = 1

[distributions]
g = gamma 1 2
e = exponential 1

[data]
traces_per_distribution = 10
trace_steps = 400
test_traces_per_cell = 2

[video]
chunk_count = 12
repeats = 1

[agent]
hidden = 8
episodes = 20

[value]
hidden = 8
rollouts = 4
epochs = 3

[ensemble]
k = 3

[nd]
k = 2
l = 2
max_samples = 200

[calibration]
quantile_step = 0.25
l_values = 1 2
)";

inline std::filesystem::path WriteTinyConfig(const std::filesystem::path& dir) {
  const auto path = dir / "tiny.ini";
  std::ofstream(path) << kTinyConfig;
  return path;
}

}  // namespace osap::testing
