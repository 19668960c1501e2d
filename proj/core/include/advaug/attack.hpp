#pragma once

#include <span>

#include "advaug/network.hpp"

namespace advaug {

/// Fast gradient sign attack settings. epsilon is measured in [0, 1]
/// normalized pixel units and bounds the l-infinity norm of the perturbation.
struct AttackConfig {
  double epsilon = 0.25;
  bool clip_to_unit_box = true;

  /// Throws ConfigError for negative or non-finite epsilon.
  void validate() const;
};

/// x + epsilon * sign(grad), optionally clamped to [0, 1].
///
/// Guarantees max |x_adv - x| <= epsilon exactly in floating point: a
/// coordinate whose rounded sum overshoots is stepped back toward x.
Tensor perturb_along_sign(const Tensor& x, const Tensor& grad, const AttackConfig& config);

/// Adversarial examples x + epsilon * sign(grad_x L(x, y)) against `model`,
/// where L is the plain cross-entropy on the true labels. x is not modified.
Tensor fgsm(const Model& model, const Tensor& x, std::span<const Label> labels,
            const AttackConfig& config);

struct AttackStats {
  double clean_accuracy = 0.0;
  double adversarial_accuracy = 0.0;
};

/// Accuracy of the model on x and on fgsm(x) generated against itself.
/// Throws UsageError on an empty batch.
AttackStats attack_success_stats(const Model& model, const Tensor& x,
                                 std::span<const Label> labels, const AttackConfig& config);

/// Fraction of rows whose argmax matches the label.
double accuracy(const Tensor& logits, std::span<const Label> labels);

}  // namespace advaug
