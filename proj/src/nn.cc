#include "osap/nn.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "osap/rng.h"
#include "osap/trace.h"

namespace osap {

Mlp::Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t init_seed)
    : sizes_(std::move(layer_sizes)) {
  Layout();
  Rng rng(init_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t k = 0; k < in * out; ++k) params_[offsets_[l] + k] = limit * unit(rng);
  }
}

Mlp Mlp::Zeros(std::vector<std::size_t> layer_sizes) {
  Mlp m;
  m.sizes_ = std::move(layer_sizes);
  m.Layout();
  return m;
}

void Mlp::Layout() {
  if (sizes_.size() < 2) throw InvalidInput("Mlp needs at least input and output layers");
  for (std::size_t s : sizes_)
    if (s == 0) throw InvalidInput("Mlp layer sizes must be >= 1");
  offsets_.clear();
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

std::vector<double> Mlp::Forward(std::span<const double> input) const {
  Tape tape;
  return Forward(input, tape);
}

std::vector<double> Mlp::Forward(std::span<const double> input, Tape& tape) const {
  if (input.size() != input_dim()) throw InvalidInput("Mlp::Forward: input size mismatch");
  const std::size_t layers = sizes_.size() - 1;
  tape.activations.resize(sizes_.size());
  tape.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + in * out;
    const auto& x = tape.activations[l];
    auto& y = tape.activations[l + 1];
    y.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = (l + 1 < layers) ? std::tanh(acc) : acc;
    }
  }
  return tape.activations.back();
}

void Mlp::Backward(const Tape& tape, std::span<const double> grad_output,
                   std::span<double> grad) const {
  const std::size_t layers = sizes_.size() - 1;
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  std::vector<double> prev;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + in * out;
    const auto& x = tape.activations[l];
    for (std::size_t o = 0; o < out; ++o) {
      gb[o] += delta[o];
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += delta[o] * x[i];
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    // x is tanh output of layer l-1: d tanh = 1 - y^2.
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - x[i] * x[i];
    delta.swap(prev);
  }
}

bool Mlp::AllFinite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

void Adam::Step(std::span<double> params, std::span<const double> grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double ClipGradNorm(std::span<double> grad, double max_norm) {
  const double norm =
      std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
  if (norm > max_norm && norm > 0.0)
    for (double& g : grad) g *= max_norm / norm;
  return norm;
}

void SoftmaxInPlace(std::span<double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - peak);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

double ActorLoss(const Mlp& actor, std::span<const ActorSample> batch, double entropy_weight,
                 std::span<double> grad) {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  if (batch.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Mlp::Tape tape;
  std::vector<double> dlogits;
  double loss = 0.0;
  for (const auto& s : batch) {
    std::vector<double> probs = actor.Forward(s.features, tape);
    SoftmaxInPlace(probs);
    double entropy = 0.0;
    for (double p : probs)
      if (p > 0.0) entropy -= p * std::log(p);
    const double logp = std::log(std::max(probs[s.action], 1e-300));
    loss += -(s.advantage * logp + entropy_weight * entropy) * inv_n;
    if (grad.empty()) continue;
    // d(-A log p_a)/dz_j = -A (1[j=a] - p_j); dH/dz_j = -p_j (log p_j + H).
    dlogits.assign(probs.size(), 0.0);
    for (std::size_t j = 0; j < probs.size(); ++j) {
      const double p = probs[j];
      const double dlogp = (j == s.action ? 1.0 : 0.0) - p;
      const double dent = p > 0.0 ? -p * (std::log(p) + entropy) : 0.0;
      dlogits[j] = -(s.advantage * dlogp + entropy_weight * dent) * inv_n;
    }
    actor.Backward(tape, dlogits, grad);
  }
  return loss;
}

double RegressionLoss(const Mlp& net, std::span<const RegressionSample> batch,
                      std::span<double> grad) {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  if (batch.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Mlp::Tape tape;
  double loss = 0.0;
  for (const auto& s : batch) {
    const double err = net.Forward(s.features, tape)[0] - s.target;
    loss += 0.5 * err * err * inv_n;
    if (grad.empty()) continue;
    const double d = err * inv_n;
    net.Backward(tape, std::span<const double>(&d, 1), grad);
  }
  return loss;
}

}  // namespace osap
