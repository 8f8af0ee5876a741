#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osap/policies.h"

namespace osap {

// ---------------------------------------------------------------------------
// U_S: novelty detection over throughput windows

constexpr std::size_t kThroughputWindow = 10;

// k (mean, std) pairs of sliding 10-sample windows ending at the last k
// samples, oldest first; flattened as [m0, s0, m1, s1, ...]. Population std.
using NdFeature = std::vector<double>;

std::size_t nd_history_needed(std::size_t k);

// Returns nullopt when fewer than 10 + k - 1 samples exist.
std::optional<NdFeature> nd_features(std::span<const double> throughput_history, std::size_t k);

// Per-chunk throughput estimates of a session.
std::vector<double> ThroughputHistory(const SessionState& state);

struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::vector<double> Apply(std::span<const double> x) const;
  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

struct OcSvmModel {
  std::size_t k = 0;  // window pairs the features were built from
  double nu = 0.1;
  double kernel_gamma = 0.0;
  double rho = 0.0;
  FeatureScaler scaler;
  std::vector<std::vector<double>> support_vectors;  // standardized
  std::vector<double> alphas;

  std::size_t dim() const { return scaler.mean.size(); }
  friend bool operator==(const OcSvmModel&, const OcSvmModel&) = default;
};

struct OcSvmOptions {
  double nu = 0.1;
  // <= 0 selects 1 / (dimension * variance) of the standardized features.
  double kernel_gamma = 0.0;
  double tolerance = 1e-4;  // KKT violation bound m(alpha) - M(alpha)
  std::size_t max_iterations = 10'000'000;
  bool standardize = true;
};

class SolverDidNotConverge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solves min 0.5 a'Ka s.t. 0 <= a_i <= 1/(nu n), sum a = 1 by SMO with
// second-order working-set selection.
OcSvmModel fit_ocsvm(std::span<const NdFeature> samples, const OcSvmOptions& opts,
                     std::size_t k = 0);

struct OcSvmScore {
  double score = 0.0;
  bool ood = false;
};

OcSvmScore ocsvm_score(const OcSvmModel& model, std::span<const double> x);

std::string format_ocsvm(const OcSvmModel& model);
OcSvmModel parse_ocsvm(const std::string& text);
void save_ocsvm(const OcSvmModel& model, const std::filesystem::path& path);
OcSvmModel load_ocsvm(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// U_pi and U_V: ensemble disagreement

constexpr double kKlSmoothing = 1e-8;

// sum p ln(p/q) after smoothing both sides by 1e-8 and renormalizing.
double kl(std::span<const double> p, std::span<const double> q);

struct EnsembleOptions {
  std::size_t drop = 2;
  // Reference average for the surviving members: recomputed over survivors,
  // or kept from all members.
  bool recompute_mean = true;
};

enum class Scheme { kNone, kNoveltyDetection, kAgentEnsemble, kValueEnsemble };

const char* SchemeName(Scheme s);
Scheme ParseScheme(const std::string& name);

struct UncertaintyScore {
  Scheme scheme = Scheme::kNone;
  double value = 0.0;
  bool ood = false;  // novelty detection only
};

// Drops the `drop` members with largest kl(member || mean) (lower index first
// on ties) and sums kl(survivor || survivor mean).
UncertaintyScore u_pi(std::span<const ActionDistribution> dists, const EnsembleOptions& opts = {});
// Same drop rule with absolute distance to the mean; sum of |v - mean|.
UncertaintyScore u_v(std::span<const double> values, const EnsembleOptions& opts = {});

}  // namespace osap
