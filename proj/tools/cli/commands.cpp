#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "advaug/attack.hpp"
#include "advaug/checkpoint.hpp"
#include "advaug/dataset.hpp"
#include "advaug/error.hpp"
#include "advaug/gradcheck.hpp"
#include "advaug/training.hpp"

namespace advaug::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Where a command gets its images from: MNIST IDX files or the synthetic
// two-blob fixture (for smoke tests without the dataset).
struct DataSource {
  std::string mnist_dir;
  std::size_t synthetic = 0;  // examples per class; 0 = use MNIST

  void add_options(CLI::App& app) {
    app.add_option("--mnist-dir", mnist_dir, "Directory with the four MNIST IDX files");
    app.add_option("--synthetic", synthetic,
                   "Use the two-Gaussians fixture with N examples per class instead of MNIST");
  }

  void require() const {
    if (mnist_dir.empty() && synthetic == 0)
      throw ConfigError("one of --mnist-dir or --synthetic is required");
  }

  MnistData load() const {
    require();
    if (synthetic > 0) {
      SyntheticSpec spec;
      spec.per_class = synthetic;
      MnistData d{make_synthetic(spec), {}};
      spec.seed += 1;
      d.test = make_synthetic(spec);
      d.train.name = "train";
      d.test.name = "test";
      return d;
    }
    return load_mnist(mnist_dir);
  }

  json echo() const { return {{"mnist_dir", mnist_dir}, {"synthetic", synthetic}}; }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string format_fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- train

int cmd_train(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) {
  TrainConfig tc;
  ModelConfig mc;
  DataSource source;
  std::string mode = "a3t";
  std::string out_dir;
  std::optional<double> alpha, beta;
  double eval_epsilon = 0.1;
  bool no_clip = false;
  std::size_t validation_count = 10000;

  app.add_option("--mode", mode, "Training regime")
      ->check(CLI::IsMember({"simple", "at", "a2t", "a3t"}));
  source.add_options(app);
  app.add_option("--out", out_dir, "Output directory for metrics.csv, model.ckpt, report.json")
      ->required();
  app.add_option("--seed", tc.seed, "Root random seed");
  app.add_option("--epochs", tc.epochs);
  app.add_option("--batch-size", tc.batch_size);
  app.add_option("--alpha", alpha, "Override the mode's classification mixing weight");
  app.add_option("--beta", beta, "Override the mode's encoder fooling weight");
  app.add_option("--train-epsilon", tc.train_epsilon, "FGSM epsilon used during training");
  app.add_option("--eval-epsilon", eval_epsilon, "FGSM epsilon for the final test evaluation");
  app.add_option("--lr", tc.optimizer.step_size, "Adam step size");
  app.add_option("--disc-updates", tc.discriminator_updates,
                 "Discriminator updates per classifier update");
  app.add_flag("--no-clip", no_clip, "Do not clamp adversarial pixels to [0, 1]");
  app.add_option("--validation-count", validation_count,
                 "Examples split off the end of the training set for validation");
  app.parse(std::vector<std::string>(args.rbegin(), args.rend()));

  tc.mode = parse_mode(mode);
  tc.alpha = alpha;
  tc.beta = beta;
  tc.clip_to_unit_box = !no_clip;
  tc.validate();
  const AttackConfig eval_attack{eval_epsilon, tc.clip_to_unit_box};
  eval_attack.validate();
  source.require();

  const auto start = std::chrono::steady_clock::now();
  const MnistData data = source.load();
  auto [train_split, validation_split] = split_train_validation(data.train, validation_count);
  mc.input_dim = train_split.images.cols();

  const TrainResult result =
      train(tc, mc, train_split, validation_split, [&](const MetricsRow& r) {
        err << "epoch " << r.epoch << "/" << tc.epochs
            << " loss_cls=" << format_fixed(r.losses.classification, 4)
            << " val_real=" << format_fixed(r.validation.real_accuracy, 4)
            << " val_adv=" << format_fixed(r.validation.adversarial_accuracy, 4)
            << " disc_val_adv=" << format_fixed(r.validation.disc_adversarial_accuracy, 4)
            << " (" << format_fixed(seconds_since(start), 1) << "s)\n";
      });
  const Evaluation test = evaluate(result.model, data.test, eval_attack);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    std::ofstream csv(dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw DataError("cannot write metrics.csv in '" + out_dir + "'");
    write_metrics_csv(csv, result.history);
  }
  save_checkpoint(result.model, dir / "model.ckpt");

  const LossWeights w = tc.weights();
  json config = {{"mode", mode},
                 {"out", out_dir},
                 {"seed", tc.seed},
                 {"epochs", tc.epochs},
                 {"batch_size", tc.batch_size},
                 {"alpha", w.alpha},
                 {"beta", w.beta},
                 {"train_epsilon", tc.train_epsilon},
                 {"eval_epsilon", eval_epsilon},
                 {"lr", tc.optimizer.step_size},
                 {"disc_updates", tc.discriminator_updates},
                 {"clip", tc.clip_to_unit_box},
                 {"validation_count", validation_count}};
  config.update(source.echo());
  const json report = {
      {"command", "train"},
      {"mode", mode},
      {"seed", tc.seed},
      {"config", config},
      {"model", json::parse(model_config_json(result.model.config))},
      {"test",
       {{"epsilon", eval_epsilon},
        {"real_accuracy", test.real_accuracy},
        {"adversarial_accuracy", test.adversarial_accuracy}}},
      {"metrics_path", (dir / "metrics.csv").string()},
      {"checkpoint_path", (dir / "model.ckpt").string()},
      {"wall_seconds", seconds_since(start)},
  };
  write_text(dir / "report.json", report.dump(2) + "\n");
  out << "mode=" << mode << " alpha=" << w.alpha << " beta=" << w.beta
      << " test_real_accuracy=" << format_fixed(test.real_accuracy, 4)
      << " test_adversarial_accuracy=" << format_fixed(test.adversarial_accuracy, 4)
      << " (epsilon=" << eval_epsilon << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

int cmd_eval(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
             std::ostream&) {
  std::string checkpoint;
  DataSource source;
  double epsilon = 0.1;
  std::vector<double> sweep;
  bool no_clip = false;
  std::string out_dir;

  app.add_option("--checkpoint", checkpoint, "Model checkpoint to evaluate")->required();
  source.add_options(app);
  app.add_option("--eval-epsilon,--epsilon", epsilon, "FGSM epsilon");
  app.add_option("--epsilon-sweep", sweep, "Evaluate at each listed epsilon (CSV output)")
      ->delimiter(',');
  app.add_flag("--no-clip", no_clip);
  app.add_option("--out", out_dir, "Directory for eval.json / eval_sweep.csv");
  app.parse(std::vector<std::string>(args.rbegin(), args.rend()));

  AttackConfig attack{epsilon, !no_clip};
  attack.validate();
  for (double e : sweep) AttackConfig{e, !no_clip}.validate();
  source.require();

  const auto start = std::chrono::steady_clock::now();
  const Model model = load_checkpoint(checkpoint);
  const MnistData data = source.load();
  if (data.test.images.cols() != model.config.input_dim)
    throw DataError("test images do not match the checkpoint's input dimension");

  const Evaluation e = evaluate(model, data.test, attack);
  out << "epsilon=" << epsilon << " real_accuracy=" << format_fixed(e.real_accuracy, 4)
      << " adversarial_accuracy=" << format_fixed(e.adversarial_accuracy, 4) << "\n";

  std::ostringstream sweep_csv;
  if (!sweep.empty()) {
    sweep_csv << "epsilon,real_accuracy,adversarial_accuracy\n";
    for (double eps : sweep) {
      const Evaluation s = evaluate(model, data.test, {eps, !no_clip});
      sweep_csv << eps << ',' << format_fixed(s.real_accuracy, 6) << ','
                << format_fixed(s.adversarial_accuracy, 6) << '\n';
    }
    if (out_dir.empty()) out << sweep_csv.str();
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    json config = {{"checkpoint", checkpoint}, {"eval_epsilon", epsilon}, {"clip", !no_clip},
                   {"epsilon_sweep", sweep}};
    config.update(source.echo());
    const json report = {{"command", "eval"},
                         {"config", config},
                         {"test",
                          {{"epsilon", epsilon},
                           {"real_accuracy", e.real_accuracy},
                           {"adversarial_accuracy", e.adversarial_accuracy}}},
                         {"wall_seconds", seconds_since(start)}};
    write_text(fs::path(out_dir) / "eval.json", report.dump(2) + "\n");
    if (!sweep.empty()) write_text(fs::path(out_dir) / "eval_sweep.csv", sweep_csv.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------- attack

IdxImages to_idx(const Tensor& images) {
  IdxImages img;
  img.count = static_cast<std::uint32_t>(images.rows());
  const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(images.cols())));
  if (std::size_t{side} * side == images.cols()) {
    img.rows = img.cols = side;
  } else {
    img.rows = 1;
    img.cols = static_cast<std::uint32_t>(images.cols());
  }
  img.pixels = quantize_pixels(images);
  return img;
}

int cmd_attack(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
               std::ostream&) {
  std::string checkpoint;
  DataSource source;
  double epsilon = 0.1;
  std::size_t count = 100;
  bool no_clip = false;
  std::string out_dir;

  app.add_option("--checkpoint", checkpoint)->required();
  source.add_options(app);
  app.add_option("--eval-epsilon,--epsilon", epsilon, "FGSM epsilon");
  app.add_option("--count", count, "Number of test examples to attack (from the start)");
  app.add_flag("--no-clip", no_clip);
  app.add_option("--out", out_dir)->required();
  app.parse(std::vector<std::string>(args.rbegin(), args.rend()));

  const AttackConfig attack{epsilon, !no_clip};
  attack.validate();
  source.require();
  if (count == 0) throw ConfigError("--count must be >= 1");

  const Model model = load_checkpoint(checkpoint);
  const MnistData data = source.load();
  if (count > data.test.size())
    throw ConfigError("--count exceeds the " + std::to_string(data.test.size()) +
                      " available test examples");
  if (data.test.images.cols() != model.config.input_dim)
    throw DataError("test images do not match the checkpoint's input dimension");

  const Batch b = slice(data.test, 0, count);
  const Tensor x_adv = fgsm(model, b.x, b.y, attack);
  const auto clean_pred = predict(forward_classifier(model, b.x).logits);
  const auto adv_pred = predict(forward_classifier(model, x_adv).logits);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const std::vector<std::uint8_t> labels(b.y.begin(), b.y.end());
  write_idx_images(dir / "adversarial-images-idx3-ubyte", to_idx(x_adv));
  write_idx_labels(dir / "adversarial-labels-idx1-ubyte", labels);
  write_idx_images(dir / "original-images-idx3-ubyte", to_idx(b.x));
  write_idx_labels(dir / "original-labels-idx1-ubyte", labels);

  std::ostringstream csv;
  csv << "index,true_label,clean_prediction,adversarial_prediction\n";
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < count; ++i) {
    csv << i << ',' << b.y[i] << ',' << clean_pred[i] << ',' << adv_pred[i] << '\n';
    flipped += clean_pred[i] != adv_pred[i] ? 1 : 0;
  }
  write_text(dir / "attack.csv", csv.str());
  out << "attacked " << count << " examples at epsilon=" << epsilon << ", " << flipped
      << " predictions flipped\n";
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err) {
  GradcheckOptions options;
  app.add_option("--seed", options.seed);
  app.add_option("--trials", options.trials)->check(CLI::PositiveNumber);
  app.add_flag("--corrupt-derivative", options.corrupt_derivative,
               "Negative control: perturb one analytic derivative")
      ->group("");
  app.parse(std::vector<std::string>(args.rbegin(), args.rend()));

  const auto start = std::chrono::steady_clock::now();
  const GradcheckReport report = run_gradcheck(options);
  char worst[64];
  std::snprintf(worst, sizeof worst, "%.3e", report.worst.relative_error);
  out << "checks=" << report.checks << " worst_relative_error=" << worst << " ("
      << report.worst.name << ") tolerance=" << kGradcheckTolerance
      << " seconds=" << format_fixed(seconds_since(start), 2) << "\n";
  for (const auto& f : report.failures)
    err << "FAILED " << f.name << " relative_error=" << f.relative_error << "\n";
  out << (report.passed() ? "PASS" : "FAIL") << "\n";
  return report.passed() ? kExitOk : kExitFailure;
}

using Command = int (*)(CLI::App&, const std::vector<std::string>&, std::ostream&, std::ostream&);

struct CommandEntry {
  const char* name;
  const char* description;
  Command fn;
};

constexpr CommandEntry kCommands[] = {
    {"train", "Train a model and write metrics.csv, model.ckpt and report.json", cmd_train},
    {"eval", "Real and adversarial accuracy of a checkpoint on the test split", cmd_eval},
    {"attack", "Export FGSM examples and their originals as IDX files", cmd_attack},
    {"gradcheck", "Compare analytic gradients against finite differences", cmd_gradcheck},
};

void print_usage(std::ostream& os) {
  os << "usage: advaug <command> [options]\n\ncommands:\n";
  for (const auto& c : kCommands) os << "  " << c.name << "\t" << c.description << "\n";
  os << "\nRun 'advaug <command> --help' for the options of a command.\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    print_usage(args.empty() ? err : out);
    return args.empty() ? kExitUsage : kExitOk;
  }
  const auto* entry = std::find_if(std::begin(kCommands), std::end(kCommands),
                                   [&](const CommandEntry& c) { return args[0] == c.name; });
  if (entry == std::end(kCommands)) {
    err << "unknown command '" << args[0] << "'\n\n";
    print_usage(err);
    return kExitUsage;
  }

  CLI::App app(entry->description, std::string("advaug ") + entry->name);
  app.set_config("--config", "", "Flat key=value file of option defaults");
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  try {
    return entry->fn(app, rest, out, err);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace advaug::cli
