#include "advaug/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "advaug/error.hpp"

namespace advaug {

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
}

namespace {

void check_labels(const Tensor& logits, std::span<const Label> labels) {
  if (labels.size() != logits.rows())
    throw ShapeError("got " + std::to_string(labels.size()) + " labels for logits of shape " +
                     logits.shape_string());
  for (Label y : labels)
    if (y >= logits.cols())
      throw DataError("label " + std::to_string(y) + " out of range for " +
                      std::to_string(logits.cols()) + " classes");
}

// Sum over rows of -log softmax(row)[y]; writes softmax - onehot into grad
// scaled by `scale`.
double cross_entropy_sum(const Tensor& logits, std::span<const Label> labels, double scale,
                         Tensor& grad) {
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    const double lse = m + std::log(z);
    total += lse - row[labels[r]];
    auto g = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) g[c] = std::exp(row[c] - lse) * scale;
    g[labels[r]] -= scale;
  }
  return total;
}

}  // namespace

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    auto dst = out.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      dst[c] = std::exp(row[c] - m);
      z += dst[c];
    }
    for (double& v : dst) v /= z;
  }
  return out;
}

ScalarLoss cross_entropy(const Tensor& logits, std::span<const Label> labels) {
  check_labels(logits, labels);
  if (logits.rows() == 0) throw UsageError("cross_entropy on an empty batch");
  const double n = static_cast<double>(logits.rows());
  ScalarLoss out{0.0, Tensor(logits.rows(), logits.cols())};
  out.value = cross_entropy_sum(logits, labels, 1.0 / n, out.grad) / n;
  return out;
}

ClassificationLoss classification_loss(const Tensor& logits_real, const Tensor* logits_adv,
                                       std::span<const Label> labels, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  check_labels(logits_real, labels);
  if (logits_real.rows() == 0) throw UsageError("classification_loss on an empty batch");
  if (logits_adv == nullptr && alpha != 1.0)
    throw UsageError("adversarial logits are required when alpha < 1");
  const double n = static_cast<double>(logits_real.rows());

  ClassificationLoss out;
  out.grad_real = Tensor(logits_real.rows(), logits_real.cols());
  const double real = cross_entropy_sum(logits_real, labels, alpha / n, out.grad_real);
  out.value = alpha * real / n;
  if (logits_adv != nullptr) {
    require_shape(logits_adv->same_shape(logits_real), "classification_loss", logits_real,
                  *logits_adv);
    out.grad_adv = Tensor(logits_adv->rows(), logits_adv->cols());
    const double adv = cross_entropy_sum(*logits_adv, labels, (1.0 - alpha) / n, *out.grad_adv);
    out.value += (1.0 - alpha) * adv / n;
  }
  return out;
}

ScalarLoss discriminator_loss(const Tensor& d_logits, std::span<const Tag> tags) {
  if (d_logits.cols() != 1 || d_logits.rows() != tags.size())
    throw ShapeError("discriminator_loss expects n x 1 logits with n tags, got " +
                     d_logits.shape_string() + " and " + std::to_string(tags.size()) + " tags");
  if (tags.empty()) throw UsageError("discriminator_loss on an empty batch");
  const double n = static_cast<double>(tags.size());
  ScalarLoss out{0.0, Tensor(d_logits.rows(), 1)};
  double total = 0.0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] > 1) throw DataError("discriminator tag must be 0 or 1");
    const double l = d_logits(i, 0);
    const double t = tags[i];
    total += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
    out.grad(i, 0) = (sigmoid(l) - t) / n;
  }
  out.value = total / n;
  return out;
}

ScalarLoss encoder_adversarial_loss(const Tensor& d_logits_adv, double beta) {
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  const std::vector<Tag> real(d_logits_adv.rows(), kRealTag);
  ScalarLoss out = discriminator_loss(d_logits_adv, real);
  out.value *= beta;
  scale_in_place(out.grad, beta);
  return out;
}

}  // namespace advaug
