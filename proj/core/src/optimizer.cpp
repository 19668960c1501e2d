#include "advaug/optimizer.hpp"

#include <cmath>

#include "advaug/error.hpp"

namespace advaug {

void AdamConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("optimizer step size must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("optimizer epsilon must be > 0");
}

void adam_update(Tensor& param, const Tensor& grad, Moments& moments, double beta1_power,
                 double beta2_power, const AdamConfig& config) {
  require_shape(param.same_shape(grad), "adam_update", param, grad);
  require_shape(param.same_shape(moments.first) && param.same_shape(moments.second),
                "adam_update (moments)", param, moments.first);
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - beta1_power;
  const double c2 = 1.0 - beta2_power;
  auto p = param.data();
  auto g = grad.data();
  auto m = moments.first.data();
  auto v = moments.second.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= config.step_size * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

AdamGroup::AdamGroup(const std::vector<Dense>& layers) {
  for (const auto& l : layers) {
    moments_.push_back({Tensor(l.weight.rows(), l.weight.cols()),
                        Tensor(l.weight.rows(), l.weight.cols())});
    moments_.push_back({Tensor(1, l.bias.cols()), Tensor(1, l.bias.cols())});
  }
}

void AdamGroup::update(std::vector<Dense>& layers, const std::vector<Dense>& grads,
                       const AdamConfig& config) {
  if (layers.size() != grads.size() || 2 * layers.size() != moments_.size())
    throw ShapeError("optimizer group does not match the parameter layout");
  ++steps_;
  beta1_power_ *= config.beta1;
  beta2_power_ *= config.beta2;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    adam_update(layers[i].weight, grads[i].weight, moments_[2 * i], beta1_power_, beta2_power_,
                config);
    adam_update(layers[i].bias, grads[i].bias, moments_[2 * i + 1], beta1_power_, beta2_power_,
                config);
  }
}

OptimizerState OptimizerState::for_params(const ModelParams& params) {
  return {AdamGroup(params.encoder), AdamGroup(params.residual),
          AdamGroup(params.discriminator)};
}

}  // namespace advaug
