#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advaug/attack.hpp"
#include "advaug/dataset.hpp"
#include "advaug/losses.hpp"
#include "advaug/network.hpp"
#include "advaug/optimizer.hpp"

namespace advaug {

/// Training regimes and their default loss weights (alpha, beta):
/// simple (1, 0), at (1/2, 0), a2t (1, 1), a3t (1/2, 1).
enum class TrainingMode { Simple, AT, A2T, A3T };

std::string_view mode_name(TrainingMode mode);
/// Accepts "simple", "at", "a2t", "a3t"; throws ConfigError otherwise.
TrainingMode parse_mode(std::string_view name);
LossWeights mode_weights(TrainingMode mode);

struct TrainConfig {
  TrainingMode mode = TrainingMode::A3T;
  /// Overrides of the mode's loss weights.
  std::optional<double> alpha;
  std::optional<double> beta;
  double train_epsilon = 0.25;
  bool clip_to_unit_box = true;
  std::size_t epochs = 20;
  std::size_t batch_size = 100;
  AdamConfig optimizer;
  std::uint64_t seed = 1;
  /// Discriminator updates per classifier update.
  std::size_t discriminator_updates = 1;

  LossWeights weights() const;
  AttackConfig attack() const { return {train_epsilon, clip_to_unit_box}; }
  /// True when the loss needs adversarial examples (alpha < 1 or beta > 0).
  bool uses_adversarial() const;
  void validate() const;
};

/// Random streams of one run, all derived from the root seed.
struct RunStreams {
  Rng init;
  Rng shuffle;
  Rng dropout;

  explicit RunStreams(std::uint64_t seed);
};

struct StepLosses {
  double classification = 0.0;
  double discriminator = 0.0;
  double encoder_adversarial = 0.0;
};

/// Forward passes shared by both halves of a training step.
struct AdversarialBatch {
  std::vector<Label> labels;
  ForwardTrace real;
  /// Trace of the FGSM examples; absent when the loss does not use them.
  std::optional<ForwardTrace> adversarial;
};

/// Forward pass on x and, if the loss uses them, FGSM examples generated
/// against the current parameters and their forward pass. The adversarial
/// input is a constant from here on.
AdversarialBatch prepare_batch(const Model& model, const Tensor& x, std::span<const Label> labels,
                               const TrainConfig& config);

/// Discriminator half of a step: train-mode D on the real features (tag 1)
/// and adversarial features (tag 0) as one batch, binary cross-entropy, one
/// update of the discriminator parameters only. Returns the loss.
double discriminator_substep(Model& model, OptimizerState& opt, const AdversarialBatch& batch,
                             const TrainConfig& config, Rng& dropout_rng);

/// Classifier half of a step: alpha-mixed cross-entropy plus beta times the
/// encoder fooling loss through a fresh train-mode D pass on the adversarial
/// features. Updates encoder and residual parameters only; the discriminator
/// is read but never written. Throws NumericError naming a non-finite term.
StepLosses classifier_substep(Model& model, OptimizerState& opt, AdversarialBatch& batch,
                              const TrainConfig& config, Rng& dropout_rng);

/// Full step: prepare_batch, discriminator_updates discriminator substeps
/// (skipped when no adversarial batch exists), then the classifier substep.
StepLosses train_step(Model& model, OptimizerState& opt, const Tensor& x,
                      std::span<const Label> labels, const TrainConfig& config, Rng& dropout_rng);

struct Evaluation {
  double real_accuracy = 0.0;
  double adversarial_accuracy = 0.0;
  /// Fraction of real-input features with D(z) >= 0.5.
  double disc_real_accuracy = 0.0;
  /// Fraction of adversarial-input features with D(z) < 0.5.
  double disc_adversarial_accuracy = 0.0;
};

/// Eval-mode metrics over a whole split; adversarial examples are generated
/// against `model` itself. Processes `chunk` rows at a time.
Evaluation evaluate(const Model& model, const DatasetSplit& data, const AttackConfig& attack,
                    std::size_t chunk = 1000);

struct MetricsRow {
  std::size_t epoch = 0;
  Evaluation train;
  Evaluation validation;
  StepLosses losses;  ///< means over the epoch's steps
};

using MetricsHistory = std::vector<MetricsRow>;

/// Column order: epoch, cls_acc_real_train, cls_acc_adv_train,
/// cls_acc_real_val, cls_acc_adv_val, disc_acc_real_train,
/// disc_acc_adv_train, disc_acc_real_val, disc_acc_adv_val, loss_cls,
/// loss_disc, loss_enc_adv.
std::string_view metrics_csv_header();
void write_metrics_csv(std::ostream& out, const MetricsHistory& history);

struct TrainResult {
  Model model;
  MetricsHistory history;
};

using EpochCallback = std::function<void(const MetricsRow&)>;

/// Trains from a fresh initialization. Every epoch reshuffles the training
/// split, runs one train_step per mini-batch and appends a MetricsRow
/// evaluated at train_epsilon with dropout off. Fully determined by
/// (config, model_config, data).
TrainResult train(const TrainConfig& config, const ModelConfig& model_config,
                  const DatasetSplit& train_split, const DatasetSplit& validation_split,
                  const EpochCallback& on_epoch = {});

}  // namespace advaug
