#include "advaug/attack.hpp"

#include <algorithm>
#include <cmath>

#include "advaug/error.hpp"

namespace advaug {

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw ConfigError("attack epsilon must be a finite value >= 0");
}

Tensor perturb_along_sign(const Tensor& x, const Tensor& grad, const AttackConfig& config) {
  config.validate();
  require_shape(x.same_shape(grad), "fgsm", x, grad);
  Tensor out(x.rows(), x.cols());
  auto src = x.data();
  auto g = grad.data();
  auto dst = out.data();
  const double eps = config.epsilon;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double step = g[i] > 0.0 ? eps : (g[i] < 0.0 ? -eps : 0.0);
    double v = src[i] + step;
    while (std::abs(v - src[i]) > eps) v = std::nextafter(v, src[i]);
    if (config.clip_to_unit_box) v = std::clamp(v, 0.0, 1.0);
    dst[i] = v;
  }
  return out;
}

Tensor fgsm(const Model& model, const Tensor& x, std::span<const Label> labels,
            const AttackConfig& config) {
  config.validate();
  if (config.epsilon == 0.0) return x;
  return perturb_along_sign(x, input_gradient(model, x, labels), config);
}

double accuracy(const Tensor& logits, std::span<const Label> labels) {
  if (labels.empty()) return 0.0;
  const auto pred = predict(logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

AttackStats attack_success_stats(const Model& model, const Tensor& x,
                                 std::span<const Label> labels, const AttackConfig& config) {
  config.validate();
  if (x.rows() == 0) throw UsageError("attack_success_stats on an empty batch");
  const ForwardTrace clean = forward_classifier(model, x);
  AttackStats stats;
  stats.clean_accuracy = accuracy(clean.logits, labels);
  if (config.epsilon == 0.0) {
    stats.adversarial_accuracy = stats.clean_accuracy;
    return stats;
  }
  const Tensor x_adv =
      perturb_along_sign(x, input_gradient(model, clean, labels), config);
  stats.adversarial_accuracy = accuracy(forward_classifier(model, x_adv).logits, labels);
  return stats;
}

}  // namespace advaug
