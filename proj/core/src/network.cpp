#include "advaug/network.hpp"

#include <cmath>
#include <string>

#include "advaug/error.hpp"

namespace advaug {

void ModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be >= 1");
  if (hidden_widths.empty()) throw ConfigError("at least one hidden layer is required");
  for (std::size_t w : hidden_widths)
    if (w == 0) throw ConfigError("hidden widths must be >= 1");
  if (num_classes == 0) throw ConfigError("num_classes must be >= 1");
  if (split_index < 1 || split_index > hidden_widths.size())
    throw ConfigError("split_index must lie in [1, " + std::to_string(hidden_widths.size()) +
                      "], got " + std::to_string(split_index));
  if (disc_hidden == 0) throw ConfigError("disc_hidden must be >= 1");
  if (!(disc_dropout_rate >= 0.0 && disc_dropout_rate < 1.0))
    throw ConfigError("disc_dropout_rate must lie in [0, 1)");
  if (!(leaky_slope >= 0.0 && leaky_slope <= 1.0))
    throw ConfigError("leaky_slope must lie in [0, 1]");
}

namespace {

const char* group_prefix(ParamGroup g) {
  switch (g) {
    case ParamGroup::Encoder:
      return "enc.";
    case ParamGroup::Residual:
      return "res.";
    case ParamGroup::Discriminator:
      return "disc.";
  }
  return "";
}

template <typename Params, typename Fn>
void visit_params(Params& params, Fn&& fn) {
  auto visit_group = [&](auto& layers, ParamGroup g) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string base = group_prefix(g) + std::to_string(i);
      fn(base + ".w", g, layers[i].weight);
      fn(base + ".b", g, layers[i].bias);
    }
  };
  visit_group(params.encoder, ParamGroup::Encoder);
  visit_group(params.residual, ParamGroup::Residual);
  visit_group(params.discriminator, ParamGroup::Discriminator);
}

struct LayerShape {
  std::size_t in;
  std::size_t out;
};

struct Shapes {
  std::vector<LayerShape> encoder, residual, discriminator;
};

Shapes layer_shapes(const ModelConfig& config) {
  config.validate();
  Shapes s;
  std::size_t prev = config.input_dim;
  for (std::size_t i = 0; i < config.hidden_widths.size(); ++i) {
    const std::size_t w = config.hidden_widths[i];
    (i < config.split_index ? s.encoder : s.residual).push_back({prev, w});
    prev = w;
  }
  s.residual.push_back({prev, config.num_classes});
  s.discriminator.push_back({config.feature_dim(), config.disc_hidden});
  s.discriminator.push_back({config.disc_hidden, 1});
  return s;
}

std::vector<Dense> make_layers(const std::vector<LayerShape>& shapes, Rng* rng) {
  std::vector<Dense> layers;
  layers.reserve(shapes.size());
  for (const auto& s : shapes) {
    Dense d{Tensor(s.in, s.out), Tensor(1, s.out)};
    if (rng != nullptr) {
      const double bound = std::sqrt(6.0 / static_cast<double>(s.in));
      d.weight = draw(*rng, s.in, s.out, Uniform{-bound, bound});
    }
    layers.push_back(std::move(d));
  }
  return layers;
}

Tensor affine(const Tensor& x, const Dense& layer) {
  Tensor out = matmul(x, layer.weight);
  add_row_vector(out, layer.bias);
  return out;
}

LayerTrace leaky_layer(const Tensor& x, const Dense& layer, double slope) {
  LayerTrace t;
  t.pre = affine(x, layer);
  t.post = map(t.pre, ScalarFn::leaky_relu(slope));
  return t;
}

// d_post * act'(pre) where act' is `negative_slope` for pre < 0 and 1 otherwise.
Tensor activation_backward(const Tensor& d_post, const Tensor& pre, double negative_slope) {
  Tensor d_pre(pre.rows(), pre.cols());
  auto g = d_post.data();
  auto p = pre.data();
  auto out = d_pre.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i] >= 0.0 ? g[i] : g[i] * negative_slope;
  return d_pre;
}

// Gradients of an affine layer given d_pre; fills `grad` if requested and
// returns d_input if requested (empty tensor otherwise).
Tensor affine_backward(const Tensor& input, const Dense& layer, const Tensor& d_pre,
                       Dense* grad, bool want_input) {
  if (grad != nullptr) {
    grad->weight = matmul_at_b(input, d_pre);
    grad->bias = column_sums(d_pre);
  }
  if (!want_input) return {};
  return matmul_a_bt(d_pre, layer.weight);
}

std::vector<Dense> zeros_like(const std::vector<Dense>& layers) {
  std::vector<Dense> out;
  out.reserve(layers.size());
  for (const auto& l : layers)
    out.push_back({Tensor(l.weight.rows(), l.weight.cols()), Tensor(1, l.bias.cols())});
  return out;
}

void check_input(const Model& model, const Tensor& x) {
  if (x.cols() != model.config.input_dim)
    throw ShapeError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(model.config.input_dim));
}

void accumulate(std::optional<std::vector<Dense>>& dst,
                const std::optional<std::vector<Dense>>& src, const char* name) {
  if (dst.has_value() != src.has_value())
    throw UsageError(std::string("cannot add gradients: group '") + name +
                     "' present on one side only");
  if (!dst) return;
  for (std::size_t i = 0; i < dst->size(); ++i) {
    add_in_place((*dst)[i].weight, (*src)[i].weight);
    add_in_place((*dst)[i].bias, (*src)[i].bias);
  }
}

}  // namespace

void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, ParamGroup, const Tensor&)>& fn) {
  visit_params(params, fn);
}

void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, ParamGroup, Tensor&)>& fn) {
  visit_params(params, fn);
}

ModelParams init_params(const ModelConfig& config, Rng& rng) {
  const Shapes s = layer_shapes(config);
  ModelParams p;
  p.encoder = make_layers(s.encoder, &rng);
  p.residual = make_layers(s.residual, &rng);
  p.discriminator = make_layers(s.discriminator, &rng);
  return p;
}

ModelParams zero_params(const ModelConfig& config) {
  const Shapes s = layer_shapes(config);
  return {make_layers(s.encoder, nullptr), make_layers(s.residual, nullptr),
          make_layers(s.discriminator, nullptr)};
}

ForwardTrace forward_classifier(const Model& model, const Tensor& x) {
  check_input(model, x);
  const double slope = model.config.leaky_slope;
  const auto& p = model.params;
  ForwardTrace t;
  t.input = x;
  t.encoder.reserve(p.encoder.size());
  for (const auto& layer : p.encoder)
    t.encoder.push_back(leaky_layer(t.encoder.empty() ? x : t.encoder.back().post, layer, slope));
  const std::size_t hidden = p.residual.size() - 1;
  t.residual_hidden.reserve(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    const Tensor& in = i == 0 ? t.features() : t.residual_hidden.back().post;
    t.residual_hidden.push_back(leaky_layer(in, p.residual[i], slope));
  }
  t.logits = affine(hidden == 0 ? t.features() : t.residual_hidden.back().post, p.residual.back());
  return t;
}

namespace {

DiscTrace discriminator_pass(const Model& model, const Tensor& features, Tensor mask,
                             double keep_scale) {
  const auto& p = model.params.discriminator;
  if (features.cols() != model.config.feature_dim())
    throw ShapeError("discriminator expects " + std::to_string(model.config.feature_dim()) +
                     " feature columns, got " + features.shape_string());
  if (mask.rows() != features.rows() || mask.cols() != model.config.disc_hidden)
    throw ShapeError("dropout mask has shape " + mask.shape_string());
  DiscTrace t;
  t.features = features;
  t.hidden_pre = affine(features, p[0]);
  t.mask = std::move(mask);
  t.keep_scale = keep_scale;
  t.hidden = Tensor(t.hidden_pre.rows(), t.hidden_pre.cols());
  auto pre = t.hidden_pre.data();
  auto m = t.mask.data();
  auto h = t.hidden.data();
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = pre[i] > 0.0 ? pre[i] * m[i] * keep_scale : 0.0;
  t.logits = affine(t.hidden, p[1]);
  return t;
}

double train_keep_scale(const ModelConfig& config) {
  const double rate = config.disc_dropout_rate;
  return rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0;
}

}  // namespace

DiscTrace forward_discriminator_masked(const Model& model, const Tensor& features, Tensor mask) {
  return discriminator_pass(model, features, std::move(mask), train_keep_scale(model.config));
}

DiscTrace forward_discriminator(const Model& model, const Tensor& features) {
  return discriminator_pass(model, features,
                            Tensor(features.rows(), model.config.disc_hidden, 1.0), 1.0);
}

DiscTrace forward_discriminator(const Model& model, const Tensor& features, Rng& dropout_rng) {
  const double keep = 1.0 - model.config.disc_dropout_rate;
  Tensor mask = draw(dropout_rng, features.rows(), model.config.disc_hidden, Bernoulli{keep});
  return discriminator_pass(model, features, std::move(mask), train_keep_scale(model.config));
}

Gradients& Gradients::operator+=(const Gradients& other) {
  accumulate(encoder, other.encoder, "encoder");
  accumulate(residual, other.residual, "residual");
  accumulate(discriminator, other.discriminator, "discriminator");
  if (input.has_value() != other.input.has_value())
    throw UsageError("cannot add gradients: input gradient present on one side only");
  if (input) add_in_place(*input, *other.input);
  return *this;
}

Gradients backward(const Model& model, const ForwardTrace& trace, const Upstream& upstream,
                   GradTargets targets) {
  const auto& p = model.params;
  const double slope = model.config.leaky_slope;
  const bool through_features = targets.encoder || targets.input;

  if ((targets.discriminator || upstream.d_disc_logits) && !trace.disc)
    throw UsageError("discriminator gradients requested but the trace has no discriminator pass");
  if (upstream.d_logits) {
    require_shape(upstream.d_logits->same_shape(trace.logits), "backward (class logits)",
                  *upstream.d_logits, trace.logits);
  }
  if (upstream.d_disc_logits) {
    require_shape(upstream.d_disc_logits->same_shape(trace.disc->logits),
                  "backward (discriminator logits)", *upstream.d_disc_logits, trace.disc->logits);
  }

  Gradients g;
  std::optional<Tensor> d_features;

  // Residual classifier: head, then hidden layers in reverse.
  if (targets.residual || through_features) {
    if (targets.residual) g.residual = zeros_like(p.residual);
    if (upstream.d_logits) {
      const std::size_t hidden = trace.residual_hidden.size();
      Tensor d = *upstream.d_logits;
      for (std::size_t k = p.residual.size(); k-- > 0;) {
        const bool is_head = k == hidden;
        const Tensor& in = k == 0 ? trace.features() : trace.residual_hidden[k - 1].post;
        Tensor d_pre = is_head ? std::move(d) : activation_backward(d, trace.residual_hidden[k].pre, slope);
        Dense* grad = targets.residual ? &(*g.residual)[k] : nullptr;
        d = affine_backward(in, p.residual[k], d_pre, grad, through_features || k > 0);
      }
      if (through_features) d_features = std::move(d);
    }
  }

  // Discriminator: output layer, then ReLU + dropout hidden layer.
  if (targets.discriminator || (through_features && upstream.d_disc_logits)) {
    if (targets.discriminator) g.discriminator = zeros_like(p.discriminator);
    if (upstream.d_disc_logits) {
      const DiscTrace& dt = *trace.disc;
      Dense* out_grad = targets.discriminator ? &(*g.discriminator)[1] : nullptr;
      Tensor d_hidden = affine_backward(dt.hidden, p.discriminator[1], *upstream.d_disc_logits,
                                        out_grad, true);
      auto pre = dt.hidden_pre.data();
      auto m = dt.mask.data();
      for (std::size_t i = 0; i < pre.size(); ++i) {
        double& v = d_hidden.data()[i];
        v = pre[i] >= 0.0 ? v * m[i] * dt.keep_scale : 0.0;
      }
      Dense* hid_grad = targets.discriminator ? &(*g.discriminator)[0] : nullptr;
      Tensor d_z = affine_backward(dt.features, p.discriminator[0], d_hidden, hid_grad,
                                   through_features);
      if (through_features) {
        if (d_features)
          add_in_place(*d_features, d_z);
        else
          d_features = std::move(d_z);
      }
    }
  }

  // Encoder, last layer first.
  if (through_features) {
    if (targets.encoder) g.encoder = zeros_like(p.encoder);
    if (targets.input) g.input = Tensor(trace.input.rows(), trace.input.cols());
    if (d_features) {
      Tensor d = std::move(*d_features);
      for (std::size_t k = p.encoder.size(); k-- > 0;) {
        const Tensor& in = k == 0 ? trace.input : trace.encoder[k - 1].post;
        Tensor d_pre = activation_backward(d, trace.encoder[k].pre, slope);
        Dense* grad = targets.encoder ? &(*g.encoder)[k] : nullptr;
        d = affine_backward(in, p.encoder[k], d_pre, grad, k > 0 || targets.input);
      }
      if (targets.input) g.input = std::move(d);
    }
  }
  return g;
}

Tensor input_gradient(const Model& model, const ForwardTrace& trace,
                      std::span<const Label> labels) {
  if (labels.size() != trace.logits.rows())
    throw ShapeError("got " + std::to_string(labels.size()) + " labels for a batch of " +
                     std::to_string(trace.logits.rows()));
  Tensor d_logits = softmax_rows(trace.logits);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= d_logits.cols())
      throw DataError("label " + std::to_string(labels[r]) + " out of range for " +
                      std::to_string(d_logits.cols()) + " classes");
    d_logits(r, labels[r]) -= 1.0;
  }
  Upstream up;
  up.d_logits = std::move(d_logits);
  return std::move(*backward(model, trace, up, GradTargets{.input = true}).input);
}

Tensor input_gradient(const Model& model, const Tensor& x, std::span<const Label> labels) {
  return input_gradient(model, forward_classifier(model, x), labels);
}

std::vector<Label> predict(const Tensor& logits) {
  std::vector<Label> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[r] = static_cast<Label>(best);
  }
  return out;
}

}  // namespace advaug
