#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "advaug/dataset.hpp"

namespace {

std::filesystem::path mnist_dir() {
  const char* env = std::getenv("ADVAUG_MNIST_DIR");
  return env ? env : "";
}

}  // namespace

TEST_CASE("official MNIST files") {
  const advaug::MnistData d = advaug::load_mnist(mnist_dir());
  CHECK(d.train.size() == 60000);
  CHECK(d.test.size() == 10000);
  CHECK(d.train.images.cols() == 784);
  for (const auto* split : {&d.train, &d.test}) {
    CHECK_NOTHROW(split->validate(10));
    const auto px = split->images.data();
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    CHECK(*lo >= 0.0);
    CHECK(*hi <= 1.0);
    CHECK(*hi > 0.9);
    std::vector<int> hist(10, 0);
    for (auto y : split->labels) ++hist[y];
    for (int c : hist) CHECK(c > 0);
  }
  auto [train, val] = advaug::split_train_validation(d.train, 10000);
  CHECK(train.size() == 50000);
  CHECK(val.size() == 10000);
}

int main(int argc, char** argv) {
  const auto dir = mnist_dir();
  if (dir.empty() || !std::filesystem::exists(dir / "train-images-idx3-ubyte")) {
    std::cout << "MNIST not configured (set ADVAUG_MNIST_DIR); skipping\n";
    return 77;
  }
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
