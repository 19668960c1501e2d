#pragma once

#include <cstdint>
#include <vector>

#include "advaug/network.hpp"

namespace advaug {

/// Adaptive-moment (Adam) constants.
struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// First/second moment accumulators for one parameter tensor.
struct Moments {
  Tensor first;
  Tensor second;
};

/// Moments for one list of layers plus the bias-correction state. A group
/// advances its step counter once per update() call.
class AdamGroup {
 public:
  AdamGroup() = default;
  explicit AdamGroup(const std::vector<Dense>& layers);

  /// One update of every tensor of `layers` with the matching gradients.
  void update(std::vector<Dense>& layers, const std::vector<Dense>& grads,
              const AdamConfig& config);

  std::uint64_t steps() const noexcept { return steps_; }
  const std::vector<Moments>& moments() const noexcept { return moments_; }

 private:
  std::vector<Moments> moments_;  // weight, bias, weight, bias, ...
  std::uint64_t steps_ = 0;
  double beta1_power_ = 1.0;
  double beta2_power_ = 1.0;
};

/// Optimizer state mirroring ModelParams.
struct OptimizerState {
  AdamGroup encoder;
  AdamGroup residual;
  AdamGroup discriminator;

  static OptimizerState for_params(const ModelParams& params);
};

/// Single-tensor Adam step used by AdamGroup:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   param -= step * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
/// `beta1_power`/`beta2_power` are b1^t and b2^t for the current step t.
void adam_update(Tensor& param, const Tensor& grad, Moments& moments, double beta1_power,
                 double beta2_power, const AdamConfig& config);

}  // namespace advaug
