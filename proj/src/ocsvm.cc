#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "osap/uncertainty.h"

namespace osap {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

FeatureScaler FitScaler(std::span<const NdFeature> samples, bool standardize) {
  const std::size_t d = samples.front().size();
  FeatureScaler s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 1.0);
  if (!standardize) return s;
  const double n = static_cast<double>(samples.size());
  for (const auto& x : samples)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x[j] / n;
  std::vector<double> var(d, 0.0);
  for (const auto& x : samples)
    for (std::size_t j = 0; j < d; ++j) var[j] += (x[j] - s.mean[j]) * (x[j] - s.mean[j]) / n;
  for (std::size_t j = 0; j < d; ++j) s.stddev[j] = var[j] > 0.0 ? std::sqrt(var[j]) : 1.0;
  return s;
}

}  // namespace

std::vector<double> FeatureScaler::Apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw InvalidInput("feature dimension does not match the scaler");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / stddev[j];
  return out;
}

OcSvmModel fit_ocsvm(std::span<const NdFeature> samples, const OcSvmOptions& opts,
                     std::size_t k) {
  const std::size_t n = samples.size();
  if (n < 2) throw InvalidInput("fit_ocsvm: need at least 2 samples");
  if (!(opts.nu > 0.0 && opts.nu <= 1.0)) throw InvalidInput("fit_ocsvm: nu must lie in (0, 1]");
  const std::size_t d = samples.front().size();
  if (d == 0) throw InvalidInput("fit_ocsvm: empty feature vectors");
  for (const auto& x : samples)
    if (x.size() != d) throw InvalidInput("fit_ocsvm: inconsistent feature dimensions");

  OcSvmModel model;
  model.k = k;
  model.nu = opts.nu;
  model.scaler = FitScaler(samples, opts.standardize);

  std::vector<std::vector<double>> x;
  x.reserve(n);
  for (const auto& s : samples) x.push_back(model.scaler.Apply(s));

  if (opts.kernel_gamma > 0.0) {
    model.kernel_gamma = opts.kernel_gamma;
  } else {
    double sum = 0.0, sq = 0.0;
    for (const auto& v : x)
      for (double e : v) {
        sum += e;
        sq += e * e;
      }
    const double count = static_cast<double>(n * d);
    const double var = sq / count - (sum / count) * (sum / count);
    model.kernel_gamma = 1.0 / (static_cast<double>(d) * (var > 0.0 ? var : 1.0));
  }

  std::vector<double> kmat(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    kmat[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(-model.kernel_gamma * SquaredDistance(x[i], x[j]));
      kmat[i * n + j] = v;
      kmat[j * n + i] = v;
    }
  }
  auto K = [&](std::size_t i, std::size_t j) { return kmat[i * n + j]; };

  const double upper = 1.0 / (opts.nu * static_cast<double>(n));
  std::vector<double> alpha(n, 0.0);
  {
    // Feasible start: fill alphas at the upper bound until the mass is 1.
    double mass = 1.0;
    for (std::size_t i = 0; i < n && mass > 0.0; ++i) {
      alpha[i] = std::min(upper, mass);
      mass -= alpha[i];
    }
  }
  std::vector<double> grad(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (alpha[i] > 0.0)
      for (std::size_t t = 0; t < n; ++t) grad[t] += K(t, i) * alpha[i];

  auto below_upper = [&](std::size_t t) { return alpha[t] < upper; };
  auto above_lower = [&](std::size_t t) { return alpha[t] > 0.0; };

  std::size_t iter = 0;
  for (;; ++iter) {
    if (iter >= opts.max_iterations)
      throw SolverDidNotConverge(
          fmt::format("fit_ocsvm: no convergence after {} iterations", opts.max_iterations));
    // i maximises -G over I_up.
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (below_upper(t) && -grad[t] > gmax) {
        gmax = -grad[t];
        i = t;
      }
    // j from I_low: second-order gain, and the KKT gap.
    double gmax2 = -kInf;
    double best = kInf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!above_lower(t)) continue;
      gmax2 = std::max(gmax2, grad[t]);
      if (i == n) continue;
      const double b = gmax + grad[t];
      if (b > 0.0) {
        double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (a <= 0.0) a = kTau;
        const double gain = -(b * b) / a;
        if (gain <= best) {
          best = gain;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < opts.tolerance || i == n || j == n) break;

    const double old_i = alpha[i], old_j = alpha[j];
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0.0) quad = kTau;
    const double delta = (grad[i] - grad[j]) / quad;
    const double sum = old_i + old_j;
    double ai = old_i - delta;
    double aj = old_j + delta;
    if (sum > upper) {
      if (ai > upper) {
        ai = upper;
        aj = sum - upper;
      }
    } else if (aj < 0.0) {
      aj = 0.0;
      ai = sum;
    }
    if (sum > upper) {
      if (aj > upper) {
        aj = upper;
        ai = sum - upper;
      }
    } else if (ai < 0.0) {
      ai = 0.0;
      aj = sum;
    }
    alpha[i] = ai;
    alpha[j] = aj;
    const double di = ai - old_i, dj = aj - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += K(t, i) * di + K(t, j) * dj;
  }

  double ub = kInf, lb = -kInf, free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] >= upper)
      lb = std::max(lb, grad[t]);
    else if (alpha[t] <= 0.0)
      ub = std::min(ub, grad[t]);
    else {
      ++free_count;
      free_sum += grad[t];
    }
  }
  model.rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= 0.0) continue;
    model.support_vectors.push_back(std::move(x[t]));
    model.alphas.push_back(alpha[t]);
  }
  return model;
}

OcSvmScore ocsvm_score(const OcSvmModel& model, std::span<const double> x) {
  const std::vector<double> z = model.scaler.Apply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < model.alphas.size(); ++i)
    s += model.alphas[i] * std::exp(-model.kernel_gamma * SquaredDistance(model.support_vectors[i], z));
  s -= model.rho;
  return {s, s < 0.0};
}

// ---------------------------------------------------------------------------
// Model file:
//   osap-ocsvm 1
//   k K
//   nu NU
//   kernel_gamma G
//   rho RHO
//   dim D
//   mean m_1 .. m_D
//   stddev s_1 .. s_D
//   support_vectors N
//   alpha x_1 .. x_D          (N rows, standardized coordinates)

std::string format_ocsvm(const OcSvmModel& m) {
  std::string out = "osap-ocsvm 1\n";
  out += fmt::format("k {}\nnu {}\nkernel_gamma {}\nrho {}\ndim {}\n", m.k, m.nu, m.kernel_gamma,
                     m.rho, m.dim());
  out += "mean";
  for (double v : m.scaler.mean) out += fmt::format(" {}", v);
  out += "\nstddev";
  for (double v : m.scaler.stddev) out += fmt::format(" {}", v);
  out += fmt::format("\nsupport_vectors {}\n", m.alphas.size());
  for (std::size_t i = 0; i < m.alphas.size(); ++i) {
    out += fmt::format("{}", m.alphas[i]);
    for (double v : m.support_vectors[i]) out += fmt::format(" {}", v);
    out += "\n";
  }
  return out;
}

OcSvmModel parse_ocsvm(const std::string& text) {
  std::istringstream in(text);
  auto expect = [&](const char* word) {
    std::string got;
    if (!(in >> got) || got != word)
      throw InvalidInput(fmt::format("ocsvm file: expected '{}', found '{}'", word, got));
  };
  auto number = [&](const char* what) {
    double v;
    if (!(in >> v)) throw InvalidInput(fmt::format("ocsvm file: bad or missing {}", what));
    return v;
  };
  expect("osap-ocsvm");
  if (number("version") != 1.0) throw InvalidInput("ocsvm file: unsupported version");
  OcSvmModel m;
  expect("k");
  m.k = static_cast<std::size_t>(number("k"));
  expect("nu");
  m.nu = number("nu");
  expect("kernel_gamma");
  m.kernel_gamma = number("kernel_gamma");
  expect("rho");
  m.rho = number("rho");
  expect("dim");
  const auto d = static_cast<std::size_t>(number("dim"));
  expect("mean");
  m.scaler.mean.resize(d);
  for (double& v : m.scaler.mean) v = number("mean");
  expect("stddev");
  m.scaler.stddev.resize(d);
  for (double& v : m.scaler.stddev) {
    v = number("stddev");
    if (!(v > 0.0)) throw InvalidInput("ocsvm file: stddev must be > 0");
  }
  expect("support_vectors");
  const auto count = static_cast<std::size_t>(number("support vector count"));
  m.alphas.resize(count);
  m.support_vectors.assign(count, std::vector<double>(d));
  for (std::size_t i = 0; i < count; ++i) {
    m.alphas[i] = number("alpha");
    for (double& v : m.support_vectors[i]) v = number("support vector");
  }
  if (!(m.nu > 0.0 && m.nu <= 1.0) || !(m.kernel_gamma > 0.0))
    throw InvalidInput("ocsvm file: invalid nu or kernel_gamma");
  return m;
}

void save_ocsvm(const OcSvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << format_ocsvm(model);
}

OcSvmModel load_ocsvm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ocsvm(buf.str());
}

}  // namespace osap
