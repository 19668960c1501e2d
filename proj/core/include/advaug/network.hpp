#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advaug/losses.hpp"
#include "advaug/rng.hpp"
#include "advaug/tensor.hpp"

namespace advaug {

/// Layer sizes of the classifier and its feature discriminator.
///
/// The classifier is input -> hidden_widths... -> num_classes with leaky-ReLU
/// after every hidden layer and a linear class head. The first
/// `split_index` hidden layers form the encoder; its output (the feature) is
/// what the discriminator sees. The remaining hidden layers and the head
/// form the residual classifier.
struct ModelConfig {
  std::size_t input_dim = 784;
  std::vector<std::size_t> hidden_widths{512, 256, 128};
  std::size_t num_classes = 10;
  std::size_t split_index = 2;
  double leaky_slope = 0.01;
  std::size_t disc_hidden = 128;
  double disc_dropout_rate = 0.5;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
  /// Width of the feature vector fed to the discriminator.
  std::size_t feature_dim() const { return hidden_widths.at(split_index - 1); }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Affine layer y = x W + b with W of shape in x out and b of shape 1 x out.
struct Dense {
  Tensor weight;
  Tensor bias;

  friend bool operator==(const Dense&, const Dense&) = default;
};

/// Parameter groups. `encoder` has split_index layers; `residual` holds the
/// remaining hidden layers followed by the class head; `discriminator` is
/// [hidden (ReLU + dropout), output (1 logit)].
struct ModelParams {
  std::vector<Dense> encoder;
  std::vector<Dense> residual;
  std::vector<Dense> discriminator;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct Model {
  ModelConfig config;
  ModelParams params;

  friend bool operator==(const Model&, const Model&) = default;
};

enum class ParamGroup { Encoder, Residual, Discriminator };

/// Stable names ("enc.0.w", "res.2.b", "disc.1.w", ...) in checkpoint order.
void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, ParamGroup, const Tensor&)>& fn);
void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, ParamGroup, Tensor&)>& fn);

/// He-style uniform init: weights ~ U(-s, s), s = sqrt(6 / fan_in), biases 0.
/// Draw order is encoder, residual, discriminator, each layer's weight in
/// row-major order, so the classifier weights do not depend on the
/// discriminator shape.
ModelParams init_params(const ModelConfig& config, Rng& rng);
/// All-zero parameters of the right shapes.
ModelParams zero_params(const ModelConfig& config);

struct LayerTrace {
  Tensor pre;   ///< affine output
  Tensor post;  ///< after the activation
};

/// Discriminator activations for one batch of features.
struct DiscTrace {
  Tensor features;  ///< input z
  Tensor hidden_pre;
  Tensor mask;  ///< 0/1 keep mask; all ones in eval mode
  double keep_scale = 1.0;
  Tensor hidden;  ///< relu(hidden_pre) * mask * keep_scale
  Tensor logits;  ///< n x 1; D(z) = sigmoid(logit)
};

/// Everything backward() needs from one forward pass of a batch.
struct ForwardTrace {
  Tensor input;
  std::vector<LayerTrace> encoder;
  std::vector<LayerTrace> residual_hidden;
  Tensor logits;
  std::optional<DiscTrace> disc;

  /// Feature z = E(x): the output of the last encoder layer.
  const Tensor& features() const { return encoder.back().post; }
};

/// Runs the classifier (encoder then residual) on a batch x (n x input_dim).
/// Logits are returned without softmax.
ForwardTrace forward_classifier(const Model& model, const Tensor& x);

/// Eval-mode discriminator: no dropout.
DiscTrace forward_discriminator(const Model& model, const Tensor& features);
/// Train-mode discriminator: draws a fresh Bernoulli(1 - rate) keep mask and
/// scales kept units by 1 / (1 - rate).
DiscTrace forward_discriminator(const Model& model, const Tensor& features, Rng& dropout_rng);
/// Replays a given keep mask (used for checking gradients).
DiscTrace forward_discriminator_masked(const Model& model, const Tensor& features, Tensor mask);

/// Which gradients backward() computes.
struct GradTargets {
  bool encoder = false;
  bool residual = false;
  bool discriminator = false;
  bool input = false;

  static GradTargets classifier() { return {true, true, false, false}; }
  static GradTargets all() { return {true, true, true, true}; }
};

/// Loss gradients flowing into backward(): with respect to the class logits
/// and/or the discriminator logits of the trace.
struct Upstream {
  std::optional<Tensor> d_logits;
  std::optional<Tensor> d_disc_logits;
};

/// Gradients for exactly the requested targets; the others stay empty.
struct Gradients {
  std::optional<std::vector<Dense>> encoder;
  std::optional<std::vector<Dense>> residual;
  std::optional<std::vector<Dense>> discriminator;
  std::optional<Tensor> input;

  /// Adds `other` group by group; both sides must hold the same groups.
  Gradients& operator+=(const Gradients& other);
};

/// Exact reverse-mode gradients of the upstream loss through the trace.
///
/// The discriminator logits reach the encoder and the input through the
/// feature z, never the residual classifier. Leaky-ReLU and ReLU use
/// derivative 1 at a pre-activation of exactly 0. Throws UsageError when
/// discriminator gradients or discriminator upstream are requested for a
/// trace without a discriminator pass.
Gradients backward(const Model& model, const ForwardTrace& trace, const Upstream& upstream,
                   GradTargets targets);

/// Per-example gradient of the plain cross-entropy loss with respect to the
/// input: row i is d/dx_i of -log P(y_i | x_i).
Tensor input_gradient(const Model& model, const Tensor& x, std::span<const Label> labels);
/// Same, reusing a classifier trace of x.
Tensor input_gradient(const Model& model, const ForwardTrace& trace,
                      std::span<const Label> labels);

/// Row-wise argmax; ties resolve to the lowest class index.
std::vector<Label> predict(const Tensor& logits);

}  // namespace advaug
