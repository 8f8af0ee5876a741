#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace osap {

// Raised for malformed inputs: bad parameters, unparseable files, invalid
// traces. Callers at the CLI boundary turn it into a nonzero exit code.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TracePoint {
  double time_s = 0.0;
  double mbps = 0.0;

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

// Piecewise-constant throughput series. Point i holds from its timestamp
// until the next one; the last point holds for the preceding interval (or
// 1 s for a single-point trace), which defines the wrap-around period.
class Trace {
 public:
  Trace(std::string id, std::vector<TracePoint> points);

  const std::string& id() const { return id_; }
  const std::vector<TracePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  // Duration of segment i.
  double segment_duration(std::size_t i) const;
  // Total duration of one pass over the trace.
  double period() const { return period_; }
  double mean_mbps() const;

  friend bool operator==(const Trace& a, const Trace& b) {
    return a.id_ == b.id_ && a.points_ == b.points_;
  }

 private:
  std::string id_;
  std::vector<TracePoint> points_;
  double period_ = 0.0;
};

enum class DistributionKind { kGamma, kLogistic, kExponential, kFileBacked };

struct DistributionSpec {
  DistributionKind kind = DistributionKind::kExponential;
  // Gamma: shape/scale. Logistic: location/scale. Exponential: scale.
  double shape = 1.0;
  double location = 0.0;
  double scale = 1.0;
  // FileBacked: directory of trace files (or a single file).
  std::filesystem::path path;

  static DistributionSpec Gamma(double shape, double scale);
  static DistributionSpec Logistic(double location, double scale);
  static DistributionSpec Exponential(double scale);
  static DistributionSpec FileBacked(std::filesystem::path path);

  // Throws InvalidInput on non-positive scale/shape.
  void Validate() const;
  std::string ToString() const;
};

// Parses "gamma 1 2", "logistic 4 0.5", "exponential 1", "file DIR".
DistributionSpec ParseDistributionSpec(const std::string& text);

struct SyntheticOptions {
  double dt_s = 1.0;
  // Samples below the floor are clamped up to it.
  double floor_mbps = 0.01;
};

Trace sample_synthetic(const DistributionSpec& spec, std::size_t steps,
                       std::uint64_t seed, const SyntheticOptions& opts = {});

// Text format: one "timestamp throughput" pair per line, '#' comments.
Trace load_trace(const std::filesystem::path& path);
Trace parse_trace(const std::string& text, std::string id);
void write_trace(const Trace& trace, const std::filesystem::path& path);
std::string format_trace(const Trace& trace);

// Loads every regular file in `dir` (sorted by name), or a single file.
std::vector<Trace> load_trace_dir(const std::filesystem::path& dir);

struct DatasetSplit {
  std::vector<Trace> train;
  std::vector<Trace> validation;
  std::vector<Trace> test;
};

// Shuffles by seed, then takes floor(n * train_fraction) traces for training
// of which floor(n_train * validation_fraction_of_train) become validation;
// the remainder is test.
DatasetSplit split_dataset(std::vector<Trace> traces, double train_fraction,
                           double validation_fraction_of_train,
                           std::uint64_t seed);

}  // namespace osap
