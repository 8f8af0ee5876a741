#include "osap/trace.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "osap/rng.h"

namespace osap {

Trace::Trace(std::string id, std::vector<TracePoint> points)
    : id_(std::move(id)), points_(std::move(points)) {
  if (points_.empty()) throw InvalidInput("trace '" + id_ + "' has no points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.time_s) || !std::isfinite(p.mbps))
      throw InvalidInput(fmt::format("trace '{}': non-finite value at point {}", id_, i));
    if (p.mbps < 0.0)
      throw InvalidInput(fmt::format("trace '{}': negative throughput at point {}", id_, i));
    if (i > 0 && p.time_s <= points_[i - 1].time_s)
      throw InvalidInput(fmt::format("trace '{}': non-increasing timestamp at point {}", id_, i));
  }
  period_ = points_.back().time_s - points_.front().time_s +
            segment_duration(points_.size() - 1);
}

double Trace::segment_duration(std::size_t i) const {
  if (i + 1 < points_.size()) return points_[i + 1].time_s - points_[i].time_s;
  if (points_.size() == 1) return 1.0;
  return points_[i].time_s - points_[i - 1].time_s;
}

double Trace::mean_mbps() const {
  double bits = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    bits += points_[i].mbps * segment_duration(i);
  return bits / period_;
}

DistributionSpec DistributionSpec::Gamma(double shape, double scale) {
  DistributionSpec s;
  s.kind = DistributionKind::kGamma;
  s.shape = shape;
  s.scale = scale;
  return s;
}

DistributionSpec DistributionSpec::Logistic(double location, double scale) {
  DistributionSpec s;
  s.kind = DistributionKind::kLogistic;
  s.location = location;
  s.scale = scale;
  return s;
}

DistributionSpec DistributionSpec::Exponential(double scale) {
  DistributionSpec s;
  s.kind = DistributionKind::kExponential;
  s.scale = scale;
  return s;
}

DistributionSpec DistributionSpec::FileBacked(std::filesystem::path path) {
  DistributionSpec s;
  s.kind = DistributionKind::kFileBacked;
  s.path = std::move(path);
  return s;
}

void DistributionSpec::Validate() const {
  switch (kind) {
    case DistributionKind::kGamma:
      if (!(shape > 0.0)) throw InvalidInput("gamma shape must be > 0");
      [[fallthrough]];
    case DistributionKind::kLogistic:
    case DistributionKind::kExponential:
      if (!(scale > 0.0)) throw InvalidInput("distribution scale must be > 0");
      break;
    case DistributionKind::kFileBacked:
      if (path.empty()) throw InvalidInput("file-backed distribution needs a path");
      break;
  }
}

std::string DistributionSpec::ToString() const {
  switch (kind) {
    case DistributionKind::kGamma:
      return fmt::format("gamma {} {}", shape, scale);
    case DistributionKind::kLogistic:
      return fmt::format("logistic {} {}", location, scale);
    case DistributionKind::kExponential:
      return fmt::format("exponential {}", scale);
    case DistributionKind::kFileBacked:
      return "file " + path.string();
  }
  return {};
}

DistributionSpec ParseDistributionSpec(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  std::transform(kind.begin(), kind.end(), kind.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  auto number = [&](const char* what) {
    double v;
    if (!(in >> v))
      throw InvalidInput(fmt::format("distribution '{}': missing {}", text, what));
    return v;
  };
  DistributionSpec spec;
  if (kind == "gamma") {
    double shape = number("shape");
    spec = DistributionSpec::Gamma(shape, number("scale"));
  } else if (kind == "logistic") {
    double loc = number("location");
    spec = DistributionSpec::Logistic(loc, number("scale"));
  } else if (kind == "exponential") {
    spec = DistributionSpec::Exponential(number("scale"));
  } else if (kind == "file") {
    std::string rest;
    std::getline(in >> std::ws, rest);
    spec = DistributionSpec::FileBacked(rest);
  } else {
    throw InvalidInput(fmt::format("unknown distribution kind in '{}'", text));
  }
  std::string extra;
  if (in >> extra) throw InvalidInput(fmt::format("distribution '{}': trailing '{}'", text, extra));
  spec.Validate();
  return spec;
}

Trace sample_synthetic(const DistributionSpec& spec, std::size_t steps,
                       std::uint64_t seed, const SyntheticOptions& opts) {
  spec.Validate();
  if (steps == 0) throw InvalidInput("sample_synthetic: steps must be >= 1");
  if (!(opts.dt_s > 0.0)) throw InvalidInput("sample_synthetic: dt must be > 0");
  if (spec.kind == DistributionKind::kFileBacked)
    throw InvalidInput("sample_synthetic: file-backed specs are loaded, not sampled");

  Rng rng(seed);
  std::gamma_distribution<double> gamma(spec.shape, spec.scale);
  std::exponential_distribution<double> exponential(1.0 / spec.scale);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<TracePoint> points;
  points.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    double x = 0.0;
    switch (spec.kind) {
      case DistributionKind::kGamma:
        x = gamma(rng);
        break;
      case DistributionKind::kExponential:
        x = exponential(rng);
        break;
      case DistributionKind::kLogistic: {
        // Inverse CDF; u = 0 is excluded to keep log finite.
        double u = unit(rng);
        while (u <= 0.0) u = unit(rng);
        x = spec.location + spec.scale * std::log(u / (1.0 - u));
        break;
      }
      case DistributionKind::kFileBacked:
        break;
    }
    points.push_back({static_cast<double>(i) * opts.dt_s, std::max(x, opts.floor_mbps)});
  }
  return Trace(fmt::format("{}#{}", spec.ToString(), seed), std::move(points));
}

Trace parse_trace(const std::string& text, std::string id) {
  std::istringstream in(text);
  std::string line;
  std::vector<TracePoint> points;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    TracePoint p;
    std::string extra;
    if (!(fields >> p.time_s >> p.mbps) || (fields >> extra))
      throw InvalidInput(fmt::format("{}:{}: expected 'timestamp throughput'", id, lineno));
    if (p.mbps < 0.0)
      throw InvalidInput(fmt::format("{}:{}: negative throughput", id, lineno));
    if (!points.empty() && p.time_s <= points.back().time_s)
      throw InvalidInput(fmt::format("{}:{}: non-increasing timestamp", id, lineno));
    points.push_back(p);
  }
  if (points.empty()) throw InvalidInput(id + ": trace file has no data lines");
  return Trace(std::move(id), std::move(points));
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open trace file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), path.filename().string());
}

std::string format_trace(const Trace& trace) {
  std::string out;
  for (const auto& p : trace.points())
    out += fmt::format("{} {}\n", p.time_s, p.mbps);
  return out;
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write trace file " + path.string());
  out << format_trace(trace);
}

std::vector<Trace> load_trace_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(dir)) return {load_trace(dir)};
  if (!fs::is_directory(dir)) throw InvalidInput("no such trace directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Trace> traces;
  traces.reserve(files.size());
  for (const auto& f : files) traces.push_back(load_trace(f));
  if (traces.empty()) throw InvalidInput("trace directory is empty: " + dir.string());
  return traces;
}

DatasetSplit split_dataset(std::vector<Trace> traces, double train_fraction,
                           double validation_fraction_of_train,
                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0) ||
      !(validation_fraction_of_train > 0.0 && validation_fraction_of_train < 1.0))
    throw InvalidInput("split_dataset: fractions must lie in (0, 1)");
  const std::size_t n = traces.size();
  const auto n_reserved = static_cast<std::size_t>(std::floor(n * train_fraction));
  const auto n_val =
      static_cast<std::size_t>(std::floor(n_reserved * validation_fraction_of_train));
  const std::size_t n_train = n_reserved - n_val;
  const std::size_t n_test = n - n_reserved;
  if (n < 3 || n_train == 0 || n_val == 0 || n_test == 0)
    throw InvalidInput(fmt::format(
        "split_dataset: {} traces cannot populate train/validation/test", n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates with our own index draws so the split does not depend on
  // the standard library's shuffle implementation.
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = rng() % (i + 1);
    std::swap(order[i], order[j]);
  }

  DatasetSplit split;
  for (std::size_t r = 0; r < n; ++r) {
    Trace& t = traces[order[r]];
    if (r < n_train)
      split.train.push_back(std::move(t));
    else if (r < n_reserved)
      split.validation.push_back(std::move(t));
    else
      split.test.push_back(std::move(t));
  }
  return split;
}

}  // namespace osap
