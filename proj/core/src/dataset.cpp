#include "advaug/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "advaug/error.hpp"

namespace advaug {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::uint32_t read_be32(const std::string& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    std::ostringstream msg;
    msg << "'" << path.string() << "' truncated: header field at byte offset " << offset
        << " is missing (file has " << bytes.size() << " bytes)";
    throw DataError(msg.str());
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xffu));
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got == want) return;
  std::ostringstream msg;
  msg << "'" << path.string() << "' is not an IDX file of the expected kind (magic 0x" << std::hex
      << got << ", expected 0x" << want << ")";
  throw DataError(msg.str());
}

void check_payload(const std::string& bytes, std::size_t header, std::size_t payload,
                   const std::filesystem::path& path) {
  if (bytes.size() < header + payload) {
    std::ostringstream msg;
    msg << "'" << path.string() << "' truncated at byte offset " << bytes.size() << ": expected "
        << header + payload << " bytes";
    throw DataError(msg.str());
  }
  if (bytes.size() > header + payload) {
    std::ostringstream msg;
    msg << "'" << path.string() << "' has " << bytes.size() - header - payload
        << " unexpected trailing bytes after byte offset " << header + payload;
    throw DataError(msg.str());
  }
}

}  // namespace

void DatasetSplit::validate(std::size_t num_classes) const {
  if (images.rows() != labels.size())
    throw DataError("split '" + name + "' has " + std::to_string(images.rows()) + " images but " +
                    std::to_string(labels.size()) + " labels");
  for (double v : images.data())
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("split '" + name + "' has pixels outside [0, 1]");
  for (Label y : labels)
    if (y >= num_classes)
      throw DataError("split '" + name + "' has label " + std::to_string(y) + " but only " +
                      std::to_string(num_classes) + " classes");
}

IdxImages read_idx_images(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  check_magic(read_be32(bytes, 0, path), kIdxImagesMagic, path);
  IdxImages img;
  img.count = read_be32(bytes, 4, path);
  img.rows = read_be32(bytes, 8, path);
  img.cols = read_be32(bytes, 12, path);
  const std::size_t payload = std::size_t{img.count} * img.rows * img.cols;
  check_payload(bytes, 16, payload, path);
  img.pixels.assign(bytes.begin() + 16, bytes.end());
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  check_magic(read_be32(bytes, 0, path), kIdxLabelsMagic, path);
  const std::uint32_t count = read_be32(bytes, 4, path);
  check_payload(bytes, 8, count, path);
  return {bytes.begin() + 8, bytes.end()};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols)
    throw DataError("IDX image payload size does not match its dimensions");
  std::string out;
  out.reserve(16 + images.pixels.size());
  put_be32(out, kIdxImagesMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.append(images.pixels.begin(), images.pixels.end());
  write_file(path, out);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::string out;
  out.reserve(8 + labels.size());
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.append(labels.begin(), labels.end());
  write_file(path, out);
}

DatasetSplit load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path, std::string name) {
  const IdxImages img = read_idx_images(images_path);
  const std::vector<std::uint8_t> raw_labels = read_idx_labels(labels_path);
  if (raw_labels.size() != img.count)
    throw DataError("'" + images_path.string() + "' holds " + std::to_string(img.count) +
                    " images but '" + labels_path.string() + "' holds " +
                    std::to_string(raw_labels.size()) + " labels");
  const std::size_t dim = std::size_t{img.rows} * img.cols;
  DatasetSplit split;
  split.name = std::move(name);
  split.images = Tensor(img.count, dim);
  auto dst = split.images.data();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) dst[i] = img.pixels[i] / 255.0;
  split.labels.assign(raw_labels.begin(), raw_labels.end());
  return split;
}

MnistData load_mnist(const std::filesystem::path& dir) {
  return {load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", "train"),
          load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", "test")};
}

std::vector<std::uint8_t> quantize_pixels(const Tensor& images) {
  std::vector<std::uint8_t> out(images.size());
  auto src = images.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::clamp(std::round(src[i] * 255.0), 0.0, 255.0));
  return out;
}

std::pair<DatasetSplit, DatasetSplit> split_train_validation(const DatasetSplit& data,
                                                             std::size_t validation_count) {
  const std::size_t n = data.size();
  if (validation_count == 0 || validation_count >= n)
    throw ConfigError("validation count must lie in [1, " + std::to_string(n) + "), got " +
                      std::to_string(validation_count));
  const std::size_t cut = n - validation_count;
  auto take = [&](std::size_t begin, std::size_t count, std::string name) {
    Batch b = slice(data, begin, count);
    return DatasetSplit{std::move(name), std::move(b.x), std::move(b.y)};
  };
  return {take(0, cut, "train"), take(cut, validation_count, "validation")};
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  const std::vector<std::size_t> order = permutation(rng, n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    batches.emplace_back(order.begin() + static_cast<long>(begin),
                         order.begin() + static_cast<long>(end));
  }
  return batches;
}

Batch gather(const DatasetSplit& data, std::span<const std::size_t> indices) {
  Batch b{select_rows(data.images, indices), {}};
  b.y.reserve(indices.size());
  for (std::size_t i : indices) b.y.push_back(data.labels[i]);
  return b;
}

Batch slice(const DatasetSplit& data, std::size_t begin, std::size_t count) {
  if (begin + count > data.size()) throw ShapeError("slice past the end of the dataset");
  const std::size_t dim = data.images.cols();
  auto src = data.images.data().subspan(begin * dim, count * dim);
  Batch b{Tensor(count, dim), {}};
  std::copy(src.begin(), src.end(), b.x.data().begin());
  b.y.assign(data.labels.begin() + static_cast<long>(begin),
             data.labels.begin() + static_cast<long>(begin + count));
  return b;
}

DatasetSplit make_synthetic(const SyntheticSpec& spec) {
  if (spec.per_class == 0 || spec.dim == 0) throw ConfigError("synthetic spec needs n, dim >= 1");
  if (!(spec.noise_std >= 0.0)) throw ConfigError("synthetic noise std must be >= 0");
  Rng rng(spec.seed);
  DatasetSplit out;
  out.name = "synthetic";
  out.images = Tensor(2 * spec.per_class, spec.dim);
  out.labels.resize(2 * spec.per_class);
  for (std::size_t r = 0; r < out.labels.size(); ++r) {
    const Label y = static_cast<Label>(r % 2);
    const double shift = y == 0 ? spec.offset : -spec.offset;
    out.labels[r] = y;
    auto row = out.images.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double mean = spec.base + (j % 2 == 0 ? shift : -shift);
      row[j] = std::clamp(mean + spec.noise_std * rng.normal(), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace advaug
