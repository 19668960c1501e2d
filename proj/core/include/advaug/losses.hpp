#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "advaug/tensor.hpp"

namespace advaug {

using Label = std::uint32_t;

/// Discriminator target per feature row: 1 = feature of a real input,
/// 0 = feature of an adversarial input.
using Tag = std::uint8_t;
inline constexpr Tag kRealTag = 1;
inline constexpr Tag kAdversarialTag = 0;

/// Mixing weight of the classification loss (alpha) and weight of the
/// encoder fooling loss (beta).
struct LossWeights {
  double alpha = 0.5;
  double beta = 1.0;

  /// Throws ConfigError unless 0 <= alpha <= 1 and beta >= 0.
  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct ScalarLoss {
  double value = 0.0;
  Tensor grad;  ///< d value / d logits, same shape as the logits
};

struct ClassificationLoss {
  double value = 0.0;
  Tensor grad_real;
  /// Absent when no adversarial logits were supplied.
  std::optional<Tensor> grad_adv;
};

/// Row-wise softmax with max shifting.
Tensor softmax_rows(const Tensor& logits);

/// Mean over rows of -log softmax(logits)[y].
ScalarLoss cross_entropy(const Tensor& logits, std::span<const Label> labels);

/// Batch mean of  -alpha log P(y|x) - (1 - alpha) log P(y|x_adv).
///
/// `logits_adv` may be null only when alpha == 1. With alpha == 1 and
/// adversarial logits present, grad_adv is all zeros.
/// Throws DataError for out-of-range labels, ShapeError on shape mismatch.
ClassificationLoss classification_loss(const Tensor& logits_real, const Tensor* logits_adv,
                                       std::span<const Label> labels, double alpha);

/// Mean binary cross-entropy of sigmoid(d_logits) against the tags, in the
/// stable form max(l, 0) - l t + log(1 + exp(-|l|)). `d_logits` is n x 1.
ScalarLoss discriminator_loss(const Tensor& d_logits, std::span<const Tag> tags);

/// beta * mean(-log sigmoid(l)) over adversarial feature logits; defined as
/// beta times discriminator_loss with every tag set to "real".
ScalarLoss encoder_adversarial_loss(const Tensor& d_logits_adv, double beta);

}  // namespace advaug
