#include "osap/uncertainty.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace osap {

std::size_t nd_history_needed(std::size_t k) { return kThroughputWindow + k - 1; }

std::optional<NdFeature> nd_features(std::span<const double> history, std::size_t k) {
  if (k == 0) throw InvalidInput("nd_features: k must be >= 1");
  if (history.size() < nd_history_needed(k)) return std::nullopt;
  NdFeature out;
  out.reserve(2 * k);
  const std::size_t n = history.size();
  for (std::size_t w = 0; w < k; ++w) {
    const std::size_t end = n - (k - 1 - w);  // exclusive
    const auto window = history.subspan(end - kThroughputWindow, kThroughputWindow);
    const double mean =
        std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(kThroughputWindow);
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= static_cast<double>(kThroughputWindow);
    out.push_back(mean);
    out.push_back(std::sqrt(var));
  }
  return out;
}

std::vector<double> ThroughputHistory(const SessionState& state) {
  std::vector<double> h;
  h.reserve(state.download_history.size());
  for (const auto& rec : state.download_history) h.push_back(rec.throughput_mbps);
  return h;
}

double kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInput("kl: distributions differ in length");
  if (p.empty()) throw InvalidInput("kl: empty distributions");
  const double norm = 1.0 + kKlSmoothing * static_cast<double>(p.size());
  double sum = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    const double ps = (p[a] + kKlSmoothing) / norm;
    const double qs = (q[a] + kKlSmoothing) / norm;
    sum += ps * std::log(ps / qs);
  }
  return std::max(sum, 0.0);
}

const char* SchemeName(Scheme s) {
  switch (s) {
    case Scheme::kNone:
      return "none";
    case Scheme::kNoveltyDetection:
      return "ND";
    case Scheme::kAgentEnsemble:
      return "A";
    case Scheme::kValueEnsemble:
      return "V";
  }
  return "?";
}

Scheme ParseScheme(const std::string& name) {
  if (name == "none" || name == "None") return Scheme::kNone;
  if (name == "ND" || name == "nd") return Scheme::kNoveltyDetection;
  if (name == "A" || name == "a") return Scheme::kAgentEnsemble;
  if (name == "V" || name == "v") return Scheme::kValueEnsemble;
  throw InvalidInput(fmt::format("unknown scheme '{}' (expected ND|A|V|none)", name));
}

namespace {

// Indices that survive dropping the `drop` largest distances, lower index
// dropped first on ties.
std::vector<std::size_t> Survivors(std::span<const double> distance, std::size_t drop) {
  std::vector<std::size_t> order(distance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return distance[a] > distance[b]; });
  std::vector<std::size_t> keep(order.begin() + static_cast<std::ptrdiff_t>(drop), order.end());
  std::sort(keep.begin(), keep.end());
  return keep;
}

void CheckEnsembleSize(std::size_t n, const EnsembleOptions& opts) {
  if (n < 3) throw InvalidInput(fmt::format("ensemble needs at least 3 members, got {}", n));
  if (opts.drop >= n) throw InvalidInput("ensemble drop count must leave a survivor");
}

}  // namespace

UncertaintyScore u_pi(std::span<const ActionDistribution> dists, const EnsembleOptions& opts) {
  CheckEnsembleSize(dists.size(), opts);
  const std::size_t levels = dists.front().probs.size();
  auto average = [&](std::span<const std::size_t> members) {
    // Offsets from one member keep the mean of equal members exact.
    const std::vector<double>& pivot = dists[members.front()].probs;
    std::vector<double> offset(levels, 0.0);
    for (std::size_t m : members) {
      if (dists[m].probs.size() != levels) throw InvalidInput("u_pi: distributions differ in length");
      for (std::size_t a = 0; a < levels; ++a) offset[a] += dists[m].probs[a] - pivot[a];
    }
    std::vector<double> mean(levels);
    for (std::size_t a = 0; a < levels; ++a)
      mean[a] = pivot[a] + offset[a] / static_cast<double>(members.size());
    return mean;
  };
  std::vector<std::size_t> all(dists.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<double> mean_all = average(all);
  std::vector<double> distance(dists.size());
  for (std::size_t m = 0; m < dists.size(); ++m) distance[m] = kl(dists[m].probs, mean_all);

  const auto keep = Survivors(distance, opts.drop);
  const std::vector<double> ref = opts.recompute_mean ? average(keep) : mean_all;
  double total = 0.0;
  for (std::size_t m : keep) total += kl(dists[m].probs, ref);
  return {Scheme::kAgentEnsemble, total, false};
}

UncertaintyScore u_v(std::span<const double> values, const EnsembleOptions& opts) {
  CheckEnsembleSize(values.size(), opts);
  // Means are accumulated as offsets from one member so equal members give
  // exactly zero instead of rounding noise.
  const double pivot = values[0];
  double offset_all = 0.0;
  for (double v : values) offset_all += v - pivot;
  const double mean_all = pivot + offset_all / static_cast<double>(values.size());
  std::vector<double> distance(values.size());
  for (std::size_t m = 0; m < values.size(); ++m) distance[m] = std::abs(values[m] - mean_all);
  const auto keep = Survivors(distance, opts.drop);
  double ref = mean_all;
  if (opts.recompute_mean) {
    double offset = 0.0;
    for (std::size_t m : keep) offset += values[m] - pivot;
    ref = pivot + offset / static_cast<double>(keep.size());
  }
  double total = 0.0;
  for (std::size_t m : keep) total += std::abs(values[m] - ref);
  return {Scheme::kValueEnsemble, total, false};
}

}  // namespace osap
