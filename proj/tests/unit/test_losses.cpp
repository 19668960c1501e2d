#include <doctest.h>

#include <cmath>

#include "advaug/error.hpp"
#include "advaug/losses.hpp"
#include "advaug/rng.hpp"
#include "oracles.hpp"

using namespace advaug;

namespace {

std::vector<Label> random_labels(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<Label> y(n);
  for (auto& v : y) v = static_cast<Label>(rng.below(classes));
  return y;
}

double max_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST_CASE("loss weights validation") {
  CHECK_NOTHROW(LossWeights{0.0, 0.0}.validate());
  CHECK_NOTHROW(LossWeights{1.0, 3.0}.validate());
  CHECK_THROWS_AS((LossWeights{-0.1, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((LossWeights{1.1, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((LossWeights{0.5, -1.0}.validate()), ConfigError);
}

TEST_CASE("uniform logits give ln 10 for every alpha") {
  const Tensor logits(4, 10, 0.7);
  const std::vector<Label> y{0, 3, 9, 5};
  for (double alpha : {0.0, 0.3, 0.5, 1.0}) {
    const auto loss = classification_loss(logits, &logits, y, alpha);
    CHECK(loss.value == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  }
}

TEST_CASE("alpha = 1 is plain cross-entropy") {
  Rng rng(1);
  const Tensor real = draw(rng, 6, 4, Uniform{-3, 3});
  const Tensor adv = draw(rng, 6, 4, Uniform{-3, 3});
  const auto y = random_labels(rng, 6, 4);
  const auto ce = cross_entropy(real, y);
  const auto with_adv = classification_loss(real, &adv, y, 1.0);
  CHECK(with_adv.value == ce.value);
  CHECK(with_adv.grad_real == ce.grad);
  REQUIRE(with_adv.grad_adv.has_value());
  CHECK(*with_adv.grad_adv == Tensor(6, 4));

  const auto without = classification_loss(real, nullptr, y, 1.0);
  CHECK(without.value == ce.value);
  CHECK_FALSE(without.grad_adv.has_value());
  CHECK_THROWS_AS(classification_loss(real, nullptr, y, 0.5), UsageError);
}

TEST_CASE("classification loss matches the unstabilized oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(8), k = 2 + rng.below(9);
    const Tensor real = draw(rng, n, k, Uniform{-4, 4});
    const Tensor adv = draw(rng, n, k, Uniform{-4, 4});
    const auto y = random_labels(rng, n, k);
    const double alpha = rng.uniform();
    const auto loss = classification_loss(real, &adv, y, alpha);
    const auto r = oracle::cross_entropy(real, y);
    const auto a = oracle::cross_entropy(adv, y);
    CHECK(std::abs(loss.value - (alpha * r.value + (1 - alpha) * a.value)) < 1e-12);
    Tensor gr = r.grad, ga = a.grad;
    scale_in_place(gr, alpha);
    scale_in_place(ga, 1 - alpha);
    CHECK(max_diff(loss.grad_real, gr) < 1e-12);
    CHECK(max_diff(*loss.grad_adv, ga) < 1e-12);
  }
}

TEST_CASE("mixing identity for alpha in {0, 0.25, 0.5, 1}") {
  Rng rng(3);
  const Tensor real = draw(rng, 5, 10, Uniform{-10, 10});
  const Tensor adv = draw(rng, 5, 10, Uniform{-10, 10});
  const auto y = random_labels(rng, 5, 10);
  const double ce_r = cross_entropy(real, y).value, ce_a = cross_entropy(adv, y).value;
  for (double alpha : {0.0, 0.25, 0.5, 1.0})
    CHECK(std::abs(classification_loss(real, &adv, y, alpha).value -
                   (alpha * ce_r + (1 - alpha) * ce_a)) < 1e-12);
}

TEST_CASE("losses stay finite for extreme logits") {
  const Tensor big = Tensor::from_rows({{1e300, -1e300, 0}, {-1e300, 1e300, 5}});
  const std::vector<Label> y{1, 0};
  const auto ce = cross_entropy(big, y);
  CHECK(std::isfinite(ce.value));
  CHECK(all_finite(ce.grad));

  const Tensor d = Tensor::from_rows({{1e300}, {-1e300}, {800}, {-800}});
  const std::vector<Tag> t{0, 1, 1, 0};
  const auto bce = discriminator_loss(d, t);
  CHECK(std::isfinite(bce.value));
  CHECK(all_finite(bce.grad));
  CHECK(std::isfinite(encoder_adversarial_loss(d, 1.0).value));
}

TEST_CASE("label and tag validation") {
  const Tensor logits(2, 3);
  const std::vector<Label> bad{0, 3};
  CHECK_THROWS_AS(cross_entropy(logits, bad), DataError);
  CHECK_THROWS_AS(classification_loss(logits, &logits, bad, 0.5), DataError);
  const std::vector<Label> short_labels{0};
  CHECK_THROWS_AS(cross_entropy(logits, short_labels), ShapeError);
  CHECK_THROWS_AS(classification_loss(logits, nullptr, std::vector<Label>{0, 1}, 1.5),
                  ConfigError);
  const Tensor wrong(2, 4);
  CHECK_THROWS_AS(classification_loss(logits, &wrong, std::vector<Label>{0, 1}, 0.5),
                  ShapeError);

  const Tensor d(2, 1);
  CHECK_THROWS_AS(discriminator_loss(d, std::vector<Tag>{0, 2}), DataError);
  CHECK_THROWS_AS(discriminator_loss(d, std::vector<Tag>{0}), ShapeError);
  CHECK_THROWS_AS(discriminator_loss(Tensor(2, 2), std::vector<Tag>{0, 1}), ShapeError);
  CHECK_THROWS_AS(encoder_adversarial_loss(d, -1.0), ConfigError);
}

TEST_CASE("discriminator loss examples") {
  const Tensor zero(3, 1);
  CHECK(discriminator_loss(zero, std::vector<Tag>{0, 1, 1}).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(discriminator_loss(Tensor(1, 1, 20.0), std::vector<Tag>{1}).value < 1e-8);
  CHECK(discriminator_loss(Tensor(1, 1, -20.0), std::vector<Tag>{0}).value < 1e-8);
}

TEST_CASE("discriminator loss matches the naive oracle") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    const Tensor d = draw(rng, n, 1, Uniform{-5, 5});
    std::vector<Tag> t(n);
    for (auto& v : t) v = static_cast<Tag>(rng.below(2));
    const auto got = discriminator_loss(d, t);
    const auto want = oracle::binary_cross_entropy(d, t);
    CHECK(std::abs(got.value - want.value) < 1e-10);
    CHECK(max_diff(got.grad, want.grad) < 1e-12);
  }
}

TEST_CASE("encoder adversarial loss examples") {
  Rng rng(5);
  const Tensor d = draw(rng, 7, 1, Uniform{-6, 6});
  const auto off = encoder_adversarial_loss(d, 0.0);
  CHECK(off.value == 0.0);
  CHECK(off.grad == Tensor(7, 1));
  CHECK(encoder_adversarial_loss(Tensor(1, 1), 1.0).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const std::vector<Tag> ones(7, kRealTag);
  for (double beta : {0.5, 1.0, 2.5}) {
    const auto enc = encoder_adversarial_loss(d, beta);
    const auto disc = discriminator_loss(d, ones);
    CHECK(enc.value == beta * disc.value);
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(enc.grad(i, 0) == beta * disc.grad(i, 0));
      CHECK(enc.grad(i, 0) == doctest::Approx(beta * (oracle::sigmoid(d(i, 0)) - 1.0) / 7.0));
    }
  }
}

TEST_CASE("loss gradients match central differences") {
  Rng rng(6);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(5), k = 2 + rng.below(5);
    Tensor real = draw(rng, n, k, Uniform{-5, 5});
    Tensor adv = draw(rng, n, k, Uniform{-5, 5});
    const auto y = random_labels(rng, n, k);
    const double alpha = rng.uniform();
    const auto loss = classification_loss(real, &adv, y, alpha);
    auto f = [&] { return classification_loss(real, &adv, y, alpha).value; };
    CHECK(oracle::relative_error(loss.grad_real, oracle::finite_difference(f, real, h)) < 1e-6);
    CHECK(oracle::relative_error(*loss.grad_adv, oracle::finite_difference(f, adv, h)) < 1e-6);

    Tensor d = draw(rng, n, 1, Uniform{-5, 5});
    std::vector<Tag> t(n);
    for (auto& v : t) v = static_cast<Tag>(rng.below(2));
    const double beta = rng.uniform(0.0, 3.0);
    CHECK(oracle::relative_error(
              discriminator_loss(d, t).grad,
              oracle::finite_difference([&] { return discriminator_loss(d, t).value; }, d, h)) <
          1e-6);
    CHECK(oracle::relative_error(
              encoder_adversarial_loss(d, beta).grad,
              oracle::finite_difference([&] { return encoder_adversarial_loss(d, beta).value; },
                                        d, h)) < 1e-6);
  }
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(7);
  const Tensor p = softmax_rows(draw(rng, 4, 6, Uniform{-50, 50}));
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (double v : p.row(i)) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
}
