#include "advaug/training.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "advaug/error.hpp"

namespace advaug {

std::string_view mode_name(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::Simple:
      return "simple";
    case TrainingMode::AT:
      return "at";
    case TrainingMode::A2T:
      return "a2t";
    case TrainingMode::A3T:
      return "a3t";
  }
  return "unknown";
}

TrainingMode parse_mode(std::string_view name) {
  for (auto m : {TrainingMode::Simple, TrainingMode::AT, TrainingMode::A2T, TrainingMode::A3T})
    if (name == mode_name(m)) return m;
  throw ConfigError("unknown training mode '" + std::string(name) +
                    "' (expected simple, at, a2t or a3t)");
}

LossWeights mode_weights(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::Simple:
      return {1.0, 0.0};
    case TrainingMode::AT:
      return {0.5, 0.0};
    case TrainingMode::A2T:
      return {1.0, 1.0};
    case TrainingMode::A3T:
      return {0.5, 1.0};
  }
  return {};
}

LossWeights TrainConfig::weights() const {
  LossWeights w = mode_weights(mode);
  if (alpha) w.alpha = *alpha;
  if (beta) w.beta = *beta;
  return w;
}

bool TrainConfig::uses_adversarial() const {
  const LossWeights w = weights();
  return w.alpha < 1.0 || w.beta > 0.0;
}

void TrainConfig::validate() const {
  weights().validate();
  attack().validate();
  optimizer.validate();
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (discriminator_updates == 0) throw ConfigError("discriminator updates must be >= 1");
}

RunStreams::RunStreams(std::uint64_t seed)
    : init(Rng::derive(seed, 1)), shuffle(Rng::derive(seed, 2)), dropout(Rng::derive(seed, 3)) {}

namespace {

void require_finite(double value, const char* term, const OptimizerState& opt) {
  if (std::isfinite(value)) return;
  throw NumericError(std::string("non-finite ") + term + " loss at iteration " +
                     std::to_string(opt.residual.steps() + 1));
}

}  // namespace

AdversarialBatch prepare_batch(const Model& model, const Tensor& x, std::span<const Label> labels,
                               const TrainConfig& config) {
  if (x.rows() == 0) throw UsageError("train_step on an empty batch");
  AdversarialBatch batch;
  batch.labels.assign(labels.begin(), labels.end());
  batch.real = forward_classifier(model, x);
  if (config.uses_adversarial()) {
    const AttackConfig attack = config.attack();
    const Tensor x_adv = attack.epsilon == 0.0
                             ? x
                             : perturb_along_sign(x, input_gradient(model, batch.real, labels),
                                                  attack);
    batch.adversarial = forward_classifier(model, x_adv);
  }
  return batch;
}

double discriminator_substep(Model& model, OptimizerState& opt, const AdversarialBatch& batch,
                             const TrainConfig& config, Rng& dropout_rng) {
  if (!batch.adversarial) throw UsageError("discriminator step needs an adversarial batch");
  const std::size_t n = batch.real.logits.rows();
  std::vector<Tag> tags(2 * n, kAdversarialTag);
  std::fill_n(tags.begin(), n, kRealTag);

  ForwardTrace features_only;
  features_only.disc = forward_discriminator(
      model, concat_rows(batch.real.features(), batch.adversarial->features()), dropout_rng);
  const ScalarLoss loss = discriminator_loss(features_only.disc->logits, tags);
  require_finite(loss.value, "discriminator", opt);

  Upstream up;
  up.d_disc_logits = loss.grad;
  Gradients g = backward(model, features_only, up, GradTargets{.discriminator = true});
  opt.discriminator.update(model.params.discriminator, *g.discriminator, config.optimizer);
  return loss.value;
}

StepLosses classifier_substep(Model& model, OptimizerState& opt, AdversarialBatch& batch,
                              const TrainConfig& config, Rng& dropout_rng) {
  const LossWeights w = config.weights();
  StepLosses out;
  const Tensor* adv_logits = batch.adversarial ? &batch.adversarial->logits : nullptr;
  ClassificationLoss cls = classification_loss(batch.real.logits, adv_logits, batch.labels,
                                               w.alpha);
  out.classification = cls.value;
  require_finite(out.classification, "classification", opt);

  Upstream real_up;
  real_up.d_logits = std::move(cls.grad_real);
  Gradients grads = backward(model, batch.real, real_up, GradTargets::classifier());

  if (batch.adversarial && (w.alpha < 1.0 || w.beta > 0.0)) {
    Upstream adv_up;
    if (w.alpha < 1.0) adv_up.d_logits = std::move(*cls.grad_adv);
    if (w.beta > 0.0) {
      // Fresh dropout mask; the discriminator parameters are only read.
      batch.adversarial->disc =
          forward_discriminator(model, batch.adversarial->features(), dropout_rng);
      ScalarLoss enc = encoder_adversarial_loss(batch.adversarial->disc->logits, w.beta);
      out.encoder_adversarial = enc.value;
      require_finite(out.encoder_adversarial, "encoder adversarial", opt);
      adv_up.d_disc_logits = std::move(enc.grad);
    }
    grads += backward(model, *batch.adversarial, adv_up, GradTargets::classifier());
  }

  opt.encoder.update(model.params.encoder, *grads.encoder, config.optimizer);
  opt.residual.update(model.params.residual, *grads.residual, config.optimizer);
  return out;
}

StepLosses train_step(Model& model, OptimizerState& opt, const Tensor& x,
                      std::span<const Label> labels, const TrainConfig& config, Rng& dropout_rng) {
  AdversarialBatch batch = prepare_batch(model, x, labels, config);
  double disc_loss = 0.0;
  if (batch.adversarial) {
    for (std::size_t k = 0; k < config.discriminator_updates; ++k)
      disc_loss = discriminator_substep(model, opt, batch, config, dropout_rng);
  }
  StepLosses losses = classifier_substep(model, opt, batch, config, dropout_rng);
  losses.discriminator = disc_loss;
  return losses;
}

Evaluation evaluate(const Model& model, const DatasetSplit& data, const AttackConfig& attack,
                    std::size_t chunk) {
  attack.validate();
  if (data.size() == 0) throw UsageError("evaluate on an empty split '" + data.name + "'");
  if (chunk == 0) throw UsageError("evaluation chunk must be >= 1");
  std::size_t real_hits = 0, adv_hits = 0, disc_real_hits = 0, disc_adv_hits = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += chunk) {
    const Batch b = slice(data, begin, std::min(chunk, data.size() - begin));
    const ForwardTrace real = forward_classifier(model, b.x);
    const Tensor x_adv = attack.epsilon == 0.0
                             ? b.x
                             : perturb_along_sign(b.x, input_gradient(model, real, b.y), attack);
    const ForwardTrace adv = attack.epsilon == 0.0 ? real : forward_classifier(model, x_adv);

    const auto pred_real = predict(real.logits);
    const auto pred_adv = predict(adv.logits);
    const DiscTrace d_real = forward_discriminator(model, real.features());
    const DiscTrace d_adv = forward_discriminator(model, adv.features());
    for (std::size_t i = 0; i < b.y.size(); ++i) {
      real_hits += pred_real[i] == b.y[i] ? 1 : 0;
      adv_hits += pred_adv[i] == b.y[i] ? 1 : 0;
      // sigmoid(l) >= 0.5 exactly when l >= 0; ties count as "real".
      disc_real_hits += d_real.logits(i, 0) >= 0.0 ? 1 : 0;
      disc_adv_hits += d_adv.logits(i, 0) < 0.0 ? 1 : 0;
    }
  }
  const double n = static_cast<double>(data.size());
  return {real_hits / n, adv_hits / n, disc_real_hits / n, disc_adv_hits / n};
}

std::string_view metrics_csv_header() {
  return "epoch,cls_acc_real_train,cls_acc_adv_train,cls_acc_real_val,cls_acc_adv_val,"
         "disc_acc_real_train,disc_acc_adv_train,disc_acc_real_val,disc_acc_adv_val,"
         "loss_cls,loss_disc,loss_enc_adv";
}

void write_metrics_csv(std::ostream& out, const MetricsHistory& history) {
  out << metrics_csv_header() << '\n';
  char line[512];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line,
                  "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.8f,%.8f,%.8f\n", r.epoch,
                  r.train.real_accuracy, r.train.adversarial_accuracy,
                  r.validation.real_accuracy, r.validation.adversarial_accuracy,
                  r.train.disc_real_accuracy, r.train.disc_adversarial_accuracy,
                  r.validation.disc_real_accuracy, r.validation.disc_adversarial_accuracy,
                  r.losses.classification, r.losses.discriminator,
                  r.losses.encoder_adversarial);
    out << line;
  }
}

TrainResult train(const TrainConfig& config, const ModelConfig& model_config,
                  const DatasetSplit& train_split, const DatasetSplit& validation_split,
                  const EpochCallback& on_epoch) {
  config.validate();
  model_config.validate();
  for (const DatasetSplit* s : {&train_split, &validation_split}) {
    if (s->size() == 0) throw DataError("split '" + s->name + "' is empty");
    if (s->images.cols() != model_config.input_dim)
      throw DataError("split '" + s->name + "' has " + std::to_string(s->images.cols()) +
                      " features per example, the model expects " +
                      std::to_string(model_config.input_dim));
    s->validate(model_config.num_classes);
  }

  RunStreams streams(config.seed);
  TrainResult result{{model_config, init_params(model_config, streams.init)}, {}};
  Model& model = result.model;
  OptimizerState opt = OptimizerState::for_params(model.params);
  const AttackConfig attack = config.attack();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    StepLosses sum;
    const auto batches = batch_indices(train_split.size(), config.batch_size, streams.shuffle);
    for (const auto& idx : batches) {
      const Batch b = gather(train_split, idx);
      const StepLosses step = train_step(model, opt, b.x, b.y, config, streams.dropout);
      sum.classification += step.classification;
      sum.discriminator += step.discriminator;
      sum.encoder_adversarial += step.encoder_adversarial;
    }
    const double steps = static_cast<double>(batches.size());
    MetricsRow row;
    row.epoch = epoch;
    row.losses = {sum.classification / steps, sum.discriminator / steps,
                  sum.encoder_adversarial / steps};
    row.train = evaluate(model, train_split, attack);
    row.validation = evaluate(model, validation_split, attack);
    result.history.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return result;
}

}  // namespace advaug
