#include "osap/calibration.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace osap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string FormatNumber(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

double ParseNumber(const std::string& token) {
  if (token == "inf") return kInf;
  if (token == "-inf") return -kInf;
  try {
    std::size_t used = 0;
    double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput(fmt::format("calibration file: bad number '{}'", token));
}

}  // namespace

std::vector<double> collect_window_variances(const SafeguardModels& models,
                                             const EpisodeConfig& cfg,
                                             std::span<const Trace> traces,
                                             const VideoManifest& manifest, std::uint64_t seed) {
  const Scheme scheme = cfg.controller.scheme;
  if (scheme != Scheme::kAgentEnsemble && scheme != Scheme::kValueEnsemble)
    throw InvalidInput("variance populations exist for ensemble schemes only");
  EpisodeConfig probe = cfg;
  probe.controller.alpha = kInf;
  const std::size_t k = cfg.controller.k_window;
  std::vector<double> population;
  for (const auto& r : run_episodes(models, probe, traces, manifest, seed)) {
    std::vector<double> scores;
    for (const auto& c : r.log) scores.push_back(c.score);
    for (std::size_t end = k; end <= scores.size(); ++end)
      population.push_back(window_variance(std::span<const double>(scores).subspan(end - k, k)));
  }
  return population;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CalibrationResult calibrate(const SafeguardModels& models, const EpisodeConfig& base,
                            std::span<const Trace> traces, const VideoManifest& manifest,
                            double target_qoe, const CalibrationGrid& grid, std::uint64_t seed) {
  if (grid.l_values.empty()) throw InvalidInput("calibration grid has no l values");
  if (!(grid.quantile_step > 0.0)) throw InvalidInput("calibration quantile step must be > 0");
  const auto population = collect_window_variances(models, base, traces, manifest, seed);
  if (population.empty()) throw InvalidInput("calibration: empty score population");

  std::vector<std::pair<double, double>> alphas;  // (quantile, alpha)
  const auto steps = static_cast<std::size_t>(
      std::floor((grid.quantile_max - grid.quantile_min) / grid.quantile_step + 1e-9));
  for (std::size_t s = 0; s <= steps; ++s) {
    const double q = grid.quantile_min + grid.quantile_step * static_cast<double>(s);
    alphas.emplace_back(q, quantile(population, q));
  }
  if (grid.include_infinity) alphas.emplace_back(kInf, kInf);

  CalibrationResult result;
  result.scheme = base.controller.scheme;
  result.target_qoe = target_qoe;
  bool have_best = false;
  double best_gap = kInf;
  for (const auto& [q, alpha] : alphas) {
    for (std::size_t l : grid.l_values) {
      EpisodeConfig cfg = base;
      cfg.controller.alpha = alpha;
      cfg.controller.l_consecutive = l;
      const double qoe = mean_qoe(models, cfg, traces, manifest, seed);
      result.search_log.push_back({q, alpha, l, qoe});
      const double gap = std::abs(qoe - target_qoe);
      const bool better =
          !have_best || gap < best_gap ||
          (gap == best_gap && (alpha > result.alpha ||
                               (alpha == result.alpha && l > result.l_consecutive)));
      if (better) {
        have_best = true;
        best_gap = gap;
        result.alpha = alpha;
        result.l_consecutive = l;
        result.achieved_qoe = qoe;
      }
    }
  }
  result.within_tolerance = best_gap <= grid.tolerance * std::abs(target_qoe);
  return result;
}

// ---------------------------------------------------------------------------
// Report:
//   osap-calibration 1
//   scheme A|V
//   alpha X
//   l N
//   target_qoe X
//   achieved_qoe X
//   within_tolerance 0|1
//   grid N
//   quantile alpha l qoe     (N rows)

std::string format_calibration(const CalibrationResult& r) {
  std::string out = "osap-calibration 1\n";
  out += fmt::format("scheme {}\n", SchemeName(r.scheme));
  out += fmt::format("alpha {}\nl {}\n", FormatNumber(r.alpha), r.l_consecutive);
  out += fmt::format("target_qoe {}\nachieved_qoe {}\n", FormatNumber(r.target_qoe),
                     FormatNumber(r.achieved_qoe));
  out += fmt::format("within_tolerance {}\n", r.within_tolerance ? 1 : 0);
  out += fmt::format("grid {}\n", r.search_log.size());
  for (const auto& c : r.search_log)
    out += fmt::format("{} {} {} {}\n", FormatNumber(c.quantile), FormatNumber(c.alpha),
                       c.l_consecutive, FormatNumber(c.qoe));
  return out;
}

CalibrationResult parse_calibration(const std::string& text) {
  std::istringstream in(text);
  auto expect = [&](const char* key) {
    std::string got;
    if (!(in >> got) || got != key)
      throw InvalidInput(fmt::format("calibration file: expected '{}', found '{}'", key, got));
  };
  auto token = [&]() {
    std::string t;
    if (!(in >> t)) throw InvalidInput("calibration file: truncated");
    return t;
  };
  expect("osap-calibration");
  if (token() != "1") throw InvalidInput("calibration file: unsupported version");
  CalibrationResult r;
  expect("scheme");
  r.scheme = ParseScheme(token());
  expect("alpha");
  r.alpha = ParseNumber(token());
  expect("l");
  r.l_consecutive = static_cast<std::size_t>(ParseNumber(token()));
  expect("target_qoe");
  r.target_qoe = ParseNumber(token());
  expect("achieved_qoe");
  r.achieved_qoe = ParseNumber(token());
  expect("within_tolerance");
  r.within_tolerance = token() == "1";
  expect("grid");
  const auto n = static_cast<std::size_t>(ParseNumber(token()));
  for (std::size_t i = 0; i < n; ++i) {
    CalibrationCandidate c;
    c.quantile = ParseNumber(token());
    c.alpha = ParseNumber(token());
    c.l_consecutive = static_cast<std::size_t>(ParseNumber(token()));
    c.qoe = ParseNumber(token());
    r.search_log.push_back(c);
  }
  return r;
}

void save_calibration(const CalibrationResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << format_calibration(result);
}

CalibrationResult load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_calibration(buf.str());
}

}  // namespace osap
