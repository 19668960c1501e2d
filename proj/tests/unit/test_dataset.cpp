#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "advaug/dataset.hpp"
#include "advaug/error.hpp"

using namespace advaug;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Two 2x3 images and their labels, written byte by byte.
const std::vector<unsigned char> kImages = {
    0x00, 0x00, 0x08, 0x03,  // magic
    0x00, 0x00, 0x00, 0x02,  // count
    0x00, 0x00, 0x00, 0x02,  // rows
    0x00, 0x00, 0x00, 0x03,  // cols
    0,    51,   102,  153,  204, 255,  // image 0
    1,    2,    3,    250,  128, 7,    // image 1
};
const std::vector<unsigned char> kLabels = {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 7, 3};

}  // namespace

TEST_CASE("hand-crafted IDX fixture") {
  TempDir dir("advaug_test_idx");
  write_bytes(dir.path / "img", kImages);
  write_bytes(dir.path / "lbl", kLabels);
  const DatasetSplit s = load_idx(dir.path / "img", dir.path / "lbl", "test");
  CHECK(s.name == "test");
  REQUIRE(s.size() == 2);
  CHECK(s.images.cols() == 6);
  CHECK(s.labels == std::vector<Label>{7, 3});
  const unsigned char* px = kImages.data() + 16;
  for (std::size_t i = 0; i < 12; ++i) CHECK(s.images.data()[i] == px[i] / 255.0);
  CHECK(s.images(0, 5) == 1.0);
  CHECK_NOTHROW(s.validate(10));

  SUBCASE("re-emission is byte exact") {
    const IdxImages img = read_idx_images(dir.path / "img");
    CHECK(img.count == 2);
    CHECK(img.rows == 2);
    CHECK(img.cols == 3);
    write_idx_images(dir.path / "img2", img);
    write_idx_labels(dir.path / "lbl2", read_idx_labels(dir.path / "lbl"));
    CHECK(read_bytes(dir.path / "img2") == kImages);
    CHECK(read_bytes(dir.path / "lbl2") == kLabels);
    // Quantizing the loaded pixels reproduces the stored bytes.
    CHECK(quantize_pixels(s.images) == img.pixels);
  }
}

TEST_CASE("IDX errors") {
  TempDir dir("advaug_test_idx_errors");
  write_bytes(dir.path / "img", kImages);
  write_bytes(dir.path / "lbl", kLabels);

  SUBCASE("labels file with the images magic") {
    auto bad = kLabels;
    bad[3] = 0x03;
    write_bytes(dir.path / "bad", bad);
    CHECK_THROWS_WITH_AS(load_idx(dir.path / "img", dir.path / "bad"),
                         doctest::Contains("not an IDX file"), DataError);
  }
  SUBCASE("images file with the labels magic") {
    CHECK_THROWS_AS(load_idx(dir.path / "lbl", dir.path / "lbl"), DataError);
  }
  SUBCASE("count mismatch") {
    auto bad = kLabels;
    bad[7] = 1;
    bad.pop_back();
    write_bytes(dir.path / "bad", bad);
    CHECK_THROWS_AS(load_idx(dir.path / "img", dir.path / "bad"), DataError);
  }
  SUBCASE("truncated payload reports the offset") {
    auto bad = kImages;
    bad.resize(bad.size() - 4);
    write_bytes(dir.path / "bad", bad);
    CHECK_THROWS_WITH_AS(load_idx(dir.path / "bad", dir.path / "lbl"),
                         doctest::Contains("offset 24"), DataError);
  }
  SUBCASE("truncated header") {
    write_bytes(dir.path / "bad", {0x00, 0x00, 0x08, 0x03, 0x00});
    CHECK_THROWS_WITH_AS(read_idx_images(dir.path / "bad"), doctest::Contains("offset 4"),
                         DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_idx(dir.path / "nope", dir.path / "lbl"), DataError);
  }
}

TEST_CASE("split validation") {
  DatasetSplit s{"x", Tensor(2, 3, 0.5), {1, 2}};
  CHECK_NOTHROW(s.validate(3));
  CHECK_THROWS_AS(s.validate(2), DataError);
  s.images(0, 0) = 1.5;
  CHECK_THROWS_AS(s.validate(3), DataError);
  DatasetSplit short_labels{"x", Tensor(2, 3), {1}};
  CHECK_THROWS_AS(short_labels.validate(3), DataError);
}

TEST_CASE("train/validation split") {
  DatasetSplit d{"train", Tensor(10, 2), {}};
  for (std::size_t i = 0; i < 10; ++i) {
    d.images(i, 0) = static_cast<double>(i) / 10.0;
    d.labels.push_back(static_cast<Label>(i % 3));
  }
  auto [train, val] = split_train_validation(d, 3);
  CHECK(train.size() == 7);
  CHECK(val.size() == 3);
  CHECK(train.name == "train");
  CHECK(val.name == "validation");
  CHECK(concat_rows(train.images, val.images) == d.images);
  std::vector<Label> joined = train.labels;
  joined.insert(joined.end(), val.labels.begin(), val.labels.end());
  CHECK(joined == d.labels);

  auto [one, rest] = split_train_validation(d, 9);
  CHECK(one.size() == 1);
  CHECK(rest.size() == 9);
  CHECK_THROWS_AS(split_train_validation(d, 0), ConfigError);
  CHECK_THROWS_AS(split_train_validation(d, 10), ConfigError);
}

TEST_CASE("batching") {
  Rng rng(1);
  const auto b = batch_indices(5, 2, rng);
  REQUIRE(b.size() == 3);
  CHECK(b[0].size() == 2);
  CHECK(b[1].size() == 2);
  CHECK(b[2].size() == 1);
  CHECK_THROWS_AS(batch_indices(5, 0, rng), ConfigError);

  Rng r1(7), r2(7);
  CHECK(batch_indices(103, 10, r1) == batch_indices(103, 10, r2));

  DatasetSplit d = make_synthetic({.per_class = 50, .dim = 3});
  Rng r3(8);
  std::vector<std::size_t> seen;
  std::vector<Label> labels;
  for (const auto& idx : batch_indices(d.size(), 7, r3)) {
    seen.insert(seen.end(), idx.begin(), idx.end());
    const Batch batch = gather(d, idx);
    CHECK(batch.x.rows() == idx.size());
    labels.insert(labels.end(), batch.y.begin(), batch.y.end());
    for (std::size_t k = 0; k < idx.size(); ++k)
      CHECK(batch.x(k, 1) == d.images(idx[k], 1));
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) REQUIRE(seen[i] == i);
  CHECK(seen.size() == d.size());
  auto sorted_labels = labels;
  auto want = d.labels;
  std::sort(sorted_labels.begin(), sorted_labels.end());
  std::sort(want.begin(), want.end());
  CHECK(sorted_labels == want);
}

TEST_CASE("slice") {
  const DatasetSplit d = make_synthetic({.per_class = 3, .dim = 2});
  const Batch b = slice(d, 2, 3);
  CHECK(b.x.rows() == 3);
  CHECK(b.y == std::vector<Label>{0, 1, 0});
  CHECK(b.x(0, 0) == d.images(2, 0));
  CHECK_THROWS_AS(slice(d, 4, 3), ShapeError);
}

TEST_CASE("synthetic fixture") {
  const DatasetSplit d = make_synthetic({});
  CHECK(d.size() == 400);
  CHECK(d.images.cols() == 784);
  CHECK(std::count(d.labels.begin(), d.labels.end(), 0u) == 200);
  CHECK_NOTHROW(d.validate(2));
  CHECK(make_synthetic({}).images == d.images);
  CHECK_FALSE(make_synthetic({.seed = 8}).images == d.images);

  // Class means sit at 0.5 +/- 0.15 with the sign alternating by coordinate.
  double even0 = 0.0, even1 = 0.0, odd0 = 0.0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    (d.labels[r] == 0 ? even0 : even1) += d.images(r, 0);
    if (d.labels[r] == 0) odd0 += d.images(r, 1);
  }
  CHECK(even0 / 200 == doctest::Approx(0.65).epsilon(0.01));
  CHECK(even1 / 200 == doctest::Approx(0.35).epsilon(0.01));
  CHECK(odd0 / 200 == doctest::Approx(0.35).epsilon(0.01));

  SyntheticSpec wide{.per_class = 20, .dim = 5, .base = 0.9, .offset = 0.3, .noise_std = 0.2};
  const DatasetSplit clipped = make_synthetic(wide);
  CHECK_NOTHROW(clipped.validate(2));
  CHECK(max_abs(clipped.images) == 1.0);

  CHECK_THROWS_AS(make_synthetic({.per_class = 0}), ConfigError);
}

TEST_CASE("quantize") {
  const Tensor t = Tensor::from_rows({{0.0, 1.0, 0.5, 1.2, -0.3, 0.1 / 255.0, 0.6 / 255.0}});
  CHECK(quantize_pixels(t) == std::vector<std::uint8_t>{0, 255, 128, 255, 0, 0, 1});
}
