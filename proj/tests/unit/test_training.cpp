#include <doctest.h>

#include <chrono>
#include <sstream>

#include "advaug/error.hpp"
#include "advaug/training.hpp"
#include "reference_trainer.hpp"

using namespace advaug;

namespace {

ModelConfig small_config(std::size_t dim) {
  ModelConfig c;
  c.input_dim = dim;
  c.hidden_widths = {16, 12, 8};
  c.num_classes = 2;
  c.split_index = 2;
  c.disc_hidden = 8;
  return c;
}

DatasetSplit fixture(std::size_t per_class, std::size_t dim, std::uint64_t seed = 7) {
  return make_synthetic({.per_class = per_class, .dim = dim, .seed = seed});
}

TrainConfig quick(TrainingMode mode, std::size_t epochs) {
  TrainConfig c;
  c.mode = mode;
  c.epochs = epochs;
  c.batch_size = 20;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("mode mapping") {
  CHECK(mode_weights(TrainingMode::Simple) == LossWeights{1.0, 0.0});
  CHECK(mode_weights(TrainingMode::AT) == LossWeights{0.5, 0.0});
  CHECK(mode_weights(TrainingMode::A2T) == LossWeights{1.0, 1.0});
  CHECK(mode_weights(TrainingMode::A3T) == LossWeights{0.5, 1.0});
  for (auto m : {TrainingMode::Simple, TrainingMode::AT, TrainingMode::A2T, TrainingMode::A3T})
    CHECK(parse_mode(mode_name(m)) == m);
  CHECK_THROWS_AS(parse_mode("sat"), ConfigError);

  TrainConfig c;
  c.mode = TrainingMode::AT;
  CHECK_FALSE(TrainConfig{.mode = TrainingMode::Simple}.uses_adversarial());
  CHECK(c.uses_adversarial());
  c.beta = 0.25;
  CHECK(c.weights() == LossWeights{0.5, 0.25});
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  CHECK_THROWS_AS(TrainConfig{.epochs = 0}.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig{.batch_size = 0}.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig{.alpha = 1.5}.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig{.beta = -1.0}.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig{.train_epsilon = -0.1}.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig{.discriminator_updates = 0}.validate(), ConfigError);
}

TEST_CASE("simple mode separates the synthetic fixture within 5 epochs") {
  const auto start = std::chrono::steady_clock::now();
  const DatasetSplit all = make_synthetic({});
  auto [train_split, val] = split_train_validation(all, 40);
  TrainConfig cfg;
  cfg.mode = TrainingMode::Simple;
  cfg.epochs = 5;
  const TrainResult r = train(cfg, ModelConfig{}, train_split, val);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(r.history.size() == 5);
  CHECK(r.history.back().train.real_accuracy >= 0.99);
  CHECK(seconds < 10.0);
}

TEST_CASE("same seed, same run") {
  const DatasetSplit train_split = fixture(40, 10), val = fixture(10, 10, 8);
  const TrainConfig cfg = quick(TrainingMode::A3T, 2);
  const TrainResult a = train(cfg, small_config(10), train_split, val);
  const TrainResult b = train(cfg, small_config(10), train_split, val);
  CHECK(a.model == b.model);
  std::ostringstream ca, cb;
  write_metrics_csv(ca, a.history);
  write_metrics_csv(cb, b.history);
  CHECK(ca.str() == cb.str());

  TrainConfig other = cfg;
  other.seed = 4;
  CHECK_FALSE(train(other, small_config(10), train_split, val).model == a.model);
}

TEST_CASE("history rows and ranges") {
  const DatasetSplit train_split = fixture(30, 10), val = fixture(10, 10, 8);
  for (auto mode : {TrainingMode::Simple, TrainingMode::AT, TrainingMode::A2T, TrainingMode::A3T}) {
    std::size_t calls = 0;
    const TrainResult r = train(quick(mode, 3), small_config(10), train_split, val,
                                [&](const MetricsRow&) { ++calls; });
    CHECK(calls == 3);
    REQUIRE(r.history.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
      const MetricsRow& row = r.history[e];
      CHECK(row.epoch == e + 1);
      for (const Evaluation* ev : {&row.train, &row.validation})
        for (double v : {ev->real_accuracy, ev->adversarial_accuracy, ev->disc_real_accuracy,
                         ev->disc_adversarial_accuracy})
          CHECK((v >= 0.0 && v <= 1.0));
      CHECK(row.losses.classification > 0.0);
      if (mode == TrainingMode::Simple) CHECK(row.losses.discriminator == 0.0);
      if (mode == TrainingMode::AT) CHECK(row.losses.encoder_adversarial == 0.0);
      if (mode == TrainingMode::A3T) CHECK(row.losses.encoder_adversarial > 0.0);
    }
  }
}

TEST_CASE("metrics csv layout") {
  MetricsRow row;
  row.epoch = 2;
  row.train = {0.5, 0.25, 1.0, 0.0};
  row.validation = {0.125, 0.0625, 0.75, 0.375};
  row.losses = {1.5, 0.5, 0.25};
  std::ostringstream out;
  write_metrics_csv(out, {row});
  CHECK(out.str() ==
        "epoch,cls_acc_real_train,cls_acc_adv_train,cls_acc_real_val,cls_acc_adv_val,"
        "disc_acc_real_train,disc_acc_adv_train,disc_acc_real_val,disc_acc_adv_val,"
        "loss_cls,loss_disc,loss_enc_adv\n"
        "2,0.500000,0.250000,0.125000,0.062500,1.000000,0.000000,0.750000,0.375000,"
        "1.50000000,0.50000000,0.25000000\n");
}

TEST_CASE("parameter partition across 100 steps") {
  const DatasetSplit data = fixture(50, 10);
  Rng init(1), dropout(2), shuffle(3);
  const ModelConfig mc = small_config(10);
  Model model{mc, init_params(mc, init)};
  OptimizerState opt = OptimizerState::for_params(model.params);
  TrainConfig cfg = quick(TrainingMode::A3T, 1);

  std::size_t steps = 0;
  while (steps < 100) {
    for (const auto& idx : batch_indices(data.size(), cfg.batch_size, shuffle)) {
      if (steps++ == 100) break;
      const Batch b = gather(data, idx);
      AdversarialBatch batch = prepare_batch(model, b.x, b.y, cfg);
      REQUIRE(batch.adversarial.has_value());

      const ModelParams before_disc = model.params;
      discriminator_substep(model, opt, batch, cfg, dropout);
      CHECK(model.params.encoder == before_disc.encoder);
      CHECK(model.params.residual == before_disc.residual);
      CHECK_FALSE(model.params.discriminator == before_disc.discriminator);

      const ModelParams before_cls = model.params;
      classifier_substep(model, opt, batch, cfg, dropout);
      CHECK(model.params.discriminator == before_cls.discriminator);
      CHECK_FALSE(model.params.encoder == before_cls.encoder);
      CHECK_FALSE(model.params.residual == before_cls.residual);
    }
  }
  CHECK(opt.discriminator.steps() == 100);
  CHECK(opt.encoder.steps() == 100);
}

TEST_CASE("simple mode never touches the discriminator") {
  const DatasetSplit data = fixture(20, 10);
  Rng init(1), dropout(2);
  const ModelConfig mc = small_config(10);
  Model model{mc, init_params(mc, init)};
  const auto disc = model.params.discriminator;
  OptimizerState opt = OptimizerState::for_params(model.params);
  const TrainConfig cfg = quick(TrainingMode::Simple, 1);
  const Batch b = slice(data, 0, 20);
  const AdversarialBatch batch = prepare_batch(model, b.x, b.y, cfg);
  CHECK_FALSE(batch.adversarial.has_value());
  const StepLosses l = train_step(model, opt, b.x, b.y, cfg, dropout);
  CHECK(l.discriminator == 0.0);
  CHECK(l.encoder_adversarial == 0.0);
  CHECK(model.params.discriminator == disc);
  CHECK(opt.discriminator.steps() == 0);
  CHECK(dropout.next_u64() == Rng(2).next_u64());
}

TEST_CASE("extra discriminator updates") {
  const DatasetSplit data = fixture(20, 10);
  Rng init(1), dropout(2);
  const ModelConfig mc = small_config(10);
  Model model{mc, init_params(mc, init)};
  OptimizerState opt = OptimizerState::for_params(model.params);
  TrainConfig cfg = quick(TrainingMode::A3T, 1);
  cfg.discriminator_updates = 3;
  const Batch b = slice(data, 0, 20);
  train_step(model, opt, b.x, b.y, cfg, dropout);
  CHECK(opt.discriminator.steps() == 3);
  CHECK(opt.encoder.steps() == 1);
}

TEST_CASE("beta = 0 matches a trainer without a discriminator bit for bit") {
  const DatasetSplit train_split = fixture(60, 10), val = fixture(10, 10, 8);
  const ModelConfig mc = small_config(10);
  for (auto mode : {TrainingMode::AT, TrainingMode::Simple}) {
    INFO(mode_name(mode));
    const TrainConfig cfg = quick(mode, 3);
    const TrainResult lib = train(cfg, mc, train_split, val);

    oracle::ReferenceTrainer ref(mc, cfg.seed, cfg.weights().alpha, cfg.train_epsilon);
    Rng shuffle = Rng::derive(cfg.seed, 2);
    for (std::size_t e = 0; e < cfg.epochs; ++e) ref.epoch(train_split, cfg.batch_size, shuffle);

    CHECK(lib.model.params.encoder == ref.model.params.encoder);
    CHECK(lib.model.params.residual == ref.model.params.residual);
    if (mode == TrainingMode::AT) {
      // The discriminator trained alongside, without influencing the classifier.
      Rng init = Rng::derive(cfg.seed, 1);
      CHECK_FALSE(lib.model.params.discriminator == init_params(mc, init).discriminator);
    }
  }
}

TEST_CASE("evaluate") {
  const DatasetSplit data = fixture(25, 10);
  Rng rng(5);
  const ModelConfig mc = small_config(10);
  Model model{mc, init_params(mc, rng)};

  const Evaluation e0 = evaluate(model, data, {0.0, true}, 7);
  CHECK(e0.real_accuracy == e0.adversarial_accuracy);
  CHECK(evaluate(model, data, {0.2, true}, 7).real_accuracy ==
        evaluate(model, data, {0.2, true}, 1000).real_accuracy);

  // Zero discriminator: every logit is 0, which counts as "real".
  for (Dense& d : model.params.discriminator) {
    d.weight = Tensor(d.weight.rows(), d.weight.cols());
    d.bias = Tensor(1, d.bias.cols());
  }
  const Evaluation z = evaluate(model, data, {0.1, true});
  CHECK(z.disc_real_accuracy == 1.0);
  CHECK(z.disc_adversarial_accuracy == 0.0);

  CHECK_THROWS_AS(evaluate(model, DatasetSplit{"empty", Tensor(0, 10), {}}, {0.1, true}),
                  UsageError);
}

TEST_CASE("inconsistent data fails before training") {
  const DatasetSplit good = fixture(10, 10);
  const DatasetSplit wrong_dim = fixture(10, 12);
  const TrainConfig cfg = quick(TrainingMode::A3T, 1);
  CHECK_THROWS_AS(train(cfg, small_config(10), wrong_dim, good), DataError);
  CHECK_THROWS_AS(train(cfg, small_config(10), good, wrong_dim), DataError);
  DatasetSplit bad_labels = good;
  bad_labels.labels[0] = 5;
  CHECK_THROWS_AS(train(cfg, small_config(10), bad_labels, good), DataError);
  CHECK_THROWS_AS(train(cfg, small_config(10), DatasetSplit{"e", Tensor(0, 10), {}}, good),
                  DataError);
}

TEST_CASE("non-finite loss names the term and iteration") {
  ModelConfig mc;
  mc.input_dim = 2;
  mc.hidden_widths = {2};
  mc.num_classes = 2;
  mc.split_index = 1;
  mc.leaky_slope = 1.0;
  mc.disc_hidden = 1;
  Model model{mc, zero_params(mc)};
  model.params.encoder[0].weight = Tensor::identity(2);
  // Logits (1e308, -1e308) on x = (1, 0): the loss of label 1 overflows.
  model.params.residual[0].weight = Tensor::from_rows({{1e308, -1e308}, {0, 0}});
  OptimizerState opt = OptimizerState::for_params(model.params);
  Rng dropout(1);
  const std::vector<Label> y{1};
  CHECK_THROWS_WITH_AS(train_step(model, opt, Tensor::from_rows({{1, 0}}), y,
                                  quick(TrainingMode::Simple, 1), dropout),
                       doctest::Contains("classification loss at iteration 1"), NumericError);
}
