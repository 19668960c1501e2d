#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advaug/losses.hpp"
#include "advaug/rng.hpp"
#include "advaug/tensor.hpp"

namespace advaug {

/// Images (one flattened image per row, pixels in [0, 1]) with their labels.
struct DatasetSplit {
  std::string name;
  Tensor images;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return labels.size(); }
  /// Throws DataError unless rows match labels, pixels lie in [0, 1] and
  /// every label is below `num_classes`.
  void validate(std::size_t num_classes) const;
};

// IDX container (MNIST distribution format). Big-endian header: a u32 magic
// (0x00000803 for u8 images with 3 dimensions, 0x00000801 for u8 labels with
// 1 dimension), one u32 per dimension, then the raw unsigned bytes.
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Raw contents of an IDX image file.
struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  ///< count * rows * cols bytes
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Loads an image/label file pair, flattening each image to one row and
/// dividing pixels by 255. Throws DataError on a wrong magic ("not an IDX
/// file"), a count mismatch or truncation (with the byte offset).
DatasetSplit load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path, std::string name = {});

struct MnistData {
  DatasetSplit train;  ///< all 60000 training examples, file order
  DatasetSplit test;
};

/// Loads train-images-idx3-ubyte, train-labels-idx1-ubyte,
/// t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte from `dir`.
MnistData load_mnist(const std::filesystem::path& dir);

/// round(x * 255) per pixel, clamped to [0, 255].
std::vector<std::uint8_t> quantize_pixels(const Tensor& images);

/// Splits off the last `validation_count` rows (file order) as validation.
/// Requires 0 < validation_count < size.
std::pair<DatasetSplit, DatasetSplit> split_train_validation(const DatasetSplit& data,
                                                             std::size_t validation_count);

struct Batch {
  Tensor x;
  std::vector<Label> y;
};

/// One epoch of mini-batch index lists: a fresh shuffle from `rng`, chunked
/// into batch_size pieces, the last one possibly shorter.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    Rng& rng);
Batch gather(const DatasetSplit& data, std::span<const std::size_t> indices);
/// Contiguous rows [begin, begin + count) without shuffling.
Batch slice(const DatasetSplit& data, std::size_t begin, std::size_t count);

/// Two Gaussian blobs for fast tests. Class 0 is centred at base + offset * v
/// and class 1 at base - offset * v, where v alternates +1, -1 across the
/// coordinates. Samples are clipped to [0, 1].
struct SyntheticSpec {
  std::size_t per_class = 200;
  std::size_t dim = 784;
  double base = 0.5;
  double offset = 0.15;
  double noise_std = 0.05;
  std::uint64_t seed = 7;
};

/// Rows alternate between the classes (0, 1, 0, 1, ...).
DatasetSplit make_synthetic(const SyntheticSpec& spec);

}  // namespace advaug
