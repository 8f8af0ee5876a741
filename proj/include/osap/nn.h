#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace osap {

// Feed-forward network: tanh hidden layers, linear output layer. Parameters
// live in one flat vector (per layer: row-major weights, then biases) so
// optimizers and finite-difference checks can treat them uniformly.
class Mlp {
 public:
  Mlp() = default;
  // Glorot-uniform weights, zero biases.
  Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t init_seed);
  static Mlp Zeros(std::vector<std::size_t> layer_sizes);

  // Activations of every layer, input first; filled by Forward.
  struct Tape {
    std::vector<std::vector<double>> activations;
  };

  std::vector<double> Forward(std::span<const double> input) const;
  std::vector<double> Forward(std::span<const double> input, Tape& tape) const;

  // Accumulates dLoss/dParams into `grad` given dLoss/dOutput.
  void Backward(const Tape& tape, std::span<const double> grad_output,
                std::span<double> grad) const;

  std::size_t input_dim() const { return sizes_.empty() ? 0 : sizes_.front(); }
  std::size_t output_dim() const { return sizes_.empty() ? 0 : sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  bool AllFinite() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  void Layout();

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  std::vector<double> params_;
};

class Adam {
 public:
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void Step(std::span<double> params, std::span<const double> grad, double lr);

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Rescales `grad` in place so its L2 norm is at most max_norm; returns the
// norm before clipping.
double ClipGradNorm(std::span<double> grad, double max_norm);

void SoftmaxInPlace(std::span<double> logits);

// One policy-gradient sample.
struct ActorSample {
  std::vector<double> features;
  std::size_t action = 0;
  double advantage = 0.0;
};

// mean over samples of -(A * log pi(a|f) + entropy_weight * H(pi(.|f))).
// When grad is non-empty it receives dLoss/dParams (overwritten).
double ActorLoss(const Mlp& actor, std::span<const ActorSample> batch, double entropy_weight,
                 std::span<double> grad);

struct RegressionSample {
  std::vector<double> features;
  double target = 0.0;
};

// mean over samples of 0.5 * (v(f) - target)^2. grad as above.
double RegressionLoss(const Mlp& net, std::span<const RegressionSample> batch,
                      std::span<double> grad);

}  // namespace osap
