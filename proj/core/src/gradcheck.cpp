#include "advaug/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advaug/error.hpp"
#include "advaug/losses.hpp"
#include "advaug/network.hpp"
#include "advaug/rng.hpp"

namespace advaug {

double relative_error(const Tensor& analytic, const Tensor& numeric) {
  require_shape(analytic.same_shape(numeric), "relative_error", analytic, numeric);
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic.data()[i] - numeric.data()[i];
    diff += d * d;
  }
  const double scale = std::max({norm(analytic), norm(numeric), 1e-8});
  return std::sqrt(diff) / scale;
}

Tensor central_difference(const std::function<double()>& f, Tensor& x, double h) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double& v = x.data()[i];
    const double saved = v;
    v = saved + h;
    const double up = f();
    v = saved - h;
    const double down = f();
    v = saved;
    out.data()[i] = (up - down) / (2.0 * h);
  }
  return out;
}

namespace {

constexpr double kNetworkStep = 1e-5;
constexpr double kLossStep = 1e-6;
// Pre-activations closer than this to a ReLU kink are resampled; a step of
// kNetworkStep cannot cross the kink from there.
constexpr double kKinkMargin = 1e-3;

class Checker {
 public:
  explicit Checker(const GradcheckOptions& options) : options_(options) {}

  void compare(const std::string& name, Tensor analytic, const Tensor& numeric) {
    ++report_.checks;
    const double err = relative_error(analytic, numeric);
    if (err >= report_.worst.relative_error) report_.worst = {name, err};
    if (!(err < kGradcheckTolerance)) report_.failures.push_back({name, err});
  }

  void require(bool ok, const std::string& what) {
    ++report_.checks;
    if (!ok) report_.failures.push_back({what, std::numeric_limits<double>::infinity()});
  }

  const GradcheckOptions& options() const { return options_; }
  GradcheckReport take() { return std::move(report_); }

 private:
  GradcheckOptions options_;
  GradcheckReport report_;
};

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

std::vector<Label> random_labels(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<Label> y(n);
  for (auto& v : y) v = static_cast<Label>(rng.below(classes));
  return y;
}

std::vector<Tag> random_tags(Rng& rng, std::size_t n) {
  std::vector<Tag> t(n);
  for (auto& v : t) v = static_cast<Tag>(rng.below(2));
  return t;
}

void check_losses(Checker& c, Rng& rng, const std::string& prefix) {
  const std::size_t n = pick(rng, 1, 5);
  const std::size_t classes = pick(rng, 2, 5);
  Tensor real = draw(rng, n, classes, Uniform{-5.0, 5.0});
  Tensor adv = draw(rng, n, classes, Uniform{-5.0, 5.0});
  const auto y = random_labels(rng, n, classes);
  const double alpha = rng.uniform();

  const ClassificationLoss cls = classification_loss(real, &adv, y, alpha);
  auto cls_value = [&] { return classification_loss(real, &adv, y, alpha).value; };
  c.compare(prefix + " classification_loss d/d logits_real", cls.grad_real,
            central_difference(cls_value, real, kLossStep));
  c.compare(prefix + " classification_loss d/d logits_adv", *cls.grad_adv,
            central_difference(cls_value, adv, kLossStep));

  Tensor d_logits = draw(rng, n, 1, Uniform{-5.0, 5.0});
  const auto tags = random_tags(rng, n);
  c.compare(prefix + " discriminator_loss", discriminator_loss(d_logits, tags).grad,
            central_difference([&] { return discriminator_loss(d_logits, tags).value; },
                               d_logits, kLossStep));

  const double beta = rng.uniform(0.0, 2.0);
  c.compare(prefix + " encoder_adversarial_loss",
            encoder_adversarial_loss(d_logits, beta).grad,
            central_difference([&] { return encoder_adversarial_loss(d_logits, beta).value; },
                               d_logits, kLossStep));
}

struct Problem {
  Model model;
  Tensor x;
  std::vector<Label> labels;
  std::vector<Tag> tags;
  Tensor mask;
  double beta = 1.0;
};

double min_abs(const Tensor& t) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : t.data()) m = std::min(m, std::abs(v));
  return m;
}

bool away_from_kinks(const Problem& p) {
  const ForwardTrace t = forward_classifier(p.model, p.x);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& l : t.encoder) m = std::min(m, min_abs(l.pre));
  for (const auto& l : t.residual_hidden) m = std::min(m, min_abs(l.pre));
  m = std::min(m, min_abs(forward_discriminator_masked(p.model, t.features(), p.mask).hidden_pre));
  return m > kKinkMargin;
}

Problem random_problem(Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Problem p;
    ModelConfig& cfg = p.model.config;
    cfg.input_dim = pick(rng, 2, 6);
    cfg.hidden_widths.assign(pick(rng, 1, 3), 0);
    for (auto& w : cfg.hidden_widths) w = pick(rng, 2, 5);
    cfg.split_index = pick(rng, 1, cfg.hidden_widths.size());
    cfg.num_classes = pick(rng, 2, 4);
    cfg.disc_hidden = pick(rng, 2, 4);
    cfg.disc_dropout_rate = rng.uniform() < 0.5 ? 0.5 : 0.25;
    cfg.leaky_slope = rng.uniform() < 0.5 ? 0.01 : 0.2;
    p.model.params = init_params(cfg, rng);
    for_each_param(p.model.params, [&](const std::string& name, ParamGroup, Tensor& t) {
      if (name.back() == 'b') t = draw(rng, t.rows(), t.cols(), Uniform{-0.3, 0.3});
    });
    const std::size_t n = pick(rng, 1, 4);
    p.x = draw(rng, n, cfg.input_dim, Uniform{0.0, 1.0});
    p.labels = random_labels(rng, n, cfg.num_classes);
    p.tags = random_tags(rng, n);
    p.mask = draw(rng, n, cfg.disc_hidden, Bernoulli{1.0 - cfg.disc_dropout_rate});
    p.beta = rng.uniform(0.0, 2.0);
    if (away_from_kinks(p)) return p;
  }
  throw NumericError("gradcheck could not draw a problem away from activation kinks");
}

double objective(const Problem& p) {
  const ForwardTrace t = forward_classifier(p.model, p.x);
  const DiscTrace d = forward_discriminator_masked(p.model, t.features(), p.mask);
  return cross_entropy(t.logits, p.labels).value + discriminator_loss(d.logits, p.tags).value +
         encoder_adversarial_loss(d.logits, p.beta).value;
}

bool present_exactly(const Gradients& g, const GradTargets& want) {
  return g.encoder.has_value() == want.encoder && g.residual.has_value() == want.residual &&
         g.discriminator.has_value() == want.discriminator && g.input.has_value() == want.input;
}

void check_network(Checker& c, Rng& rng, const std::string& prefix) {
  Problem p = random_problem(rng);

  ForwardTrace trace = forward_classifier(p.model, p.x);
  trace.disc = forward_discriminator_masked(p.model, trace.features(), p.mask);
  Upstream up;
  up.d_logits = cross_entropy(trace.logits, p.labels).grad;
  Tensor d_disc = discriminator_loss(trace.disc->logits, p.tags).grad;
  add_in_place(d_disc, encoder_adversarial_loss(trace.disc->logits, p.beta).grad);
  up.d_disc_logits = std::move(d_disc);

  // Numeric gradients, computed once per tensor.
  auto f = [&] { return objective(p); };
  std::vector<std::pair<std::string, Tensor>> numeric;
  for_each_param(p.model.params, [&](const std::string& name, ParamGroup, Tensor& t) {
    numeric.emplace_back(name, central_difference(f, t, kNetworkStep));
  });
  const Tensor numeric_input = central_difference(f, p.x, kNetworkStep);

  const std::vector<std::pair<std::string, GradTargets>> subsets = {
      {"{enc}", {.encoder = true}},
      {"{res}", {.residual = true}},
      {"{disc}", {.discriminator = true}},
      {"{input}", {.input = true}},
      {"{all}", GradTargets::all()},
  };
  for (const auto& [label, targets] : subsets) {
    Gradients g = backward(p.model, trace, up, targets);
    c.require(present_exactly(g, targets), prefix + " " + label + " returned extra or missing groups");
    if (c.options().corrupt_derivative && g.encoder) scale_in_place((*g.encoder)[0].weight, 1.001);

    ModelParams as_params;
    if (g.encoder) as_params.encoder = *g.encoder;
    if (g.residual) as_params.residual = *g.residual;
    if (g.discriminator) as_params.discriminator = *g.discriminator;
    std::size_t k = 0;
    for_each_param(as_params, [&](const std::string& name, ParamGroup, const Tensor& t) {
      while (numeric[k].first != name) ++k;
      c.compare(prefix + " network " + label + " " + name, t, numeric[k].second);
    });
    if (g.input) c.compare(prefix + " network " + label + " input", *g.input, numeric_input);
  }

  const Tensor per_example = input_gradient(p.model, p.x, p.labels);
  Problem plain = p;
  auto plain_sum = [&] {
    return cross_entropy(forward_classifier(plain.model, plain.x).logits, plain.labels).value *
           static_cast<double>(plain.labels.size());
  };
  c.compare(prefix + " input_gradient", per_example,
            central_difference(plain_sum, plain.x, kNetworkStep));
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  if (options.trials == 0) throw ConfigError("gradcheck needs at least one trial");
  Checker checker(options);
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    Rng rng = Rng::derive(options.seed, trial);
    const std::string prefix = "trial " + std::to_string(trial);
    check_losses(checker, rng, prefix);
    check_network(checker, rng, prefix);
  }
  return checker.take();
}

}  // namespace advaug
