#include "advaug/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advaug/error.hpp"

namespace advaug {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    std::ostringstream msg;
    msg << "tensor data length " << data_.size() << " does not match shape " << rows << "x"
        << cols;
    throw ShapeError(msg.str());
  }
  if (!all_finite(*this)) throw NumericError("tensor constructed from non-finite values");
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw ShapeError("ragged row list");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(n, m, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::string Tensor::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void require_shape(bool ok, std::string_view op, const Tensor& a, const Tensor& b) {
  if (ok) return;
  std::string msg(op);
  msg += ": incompatible shapes (" + a.shape_string() + ") and (" + b.shape_string() + ")";
  throw ShapeError(msg);
}

namespace {

// Register block: kRowBlock rows of A against a packed panel of kColBlock
// columns of B. The panel is walked over the full inner dimension, so every
// output element sees its products in ascending inner-index order.
constexpr std::size_t kRowBlock = 6;
constexpr std::size_t kColBlock = 32;

struct StridedView {
  const double* data;
  std::size_t row_stride;
  std::size_t col_stride;
  double at(std::size_t r, std::size_t c) const { return data[r * row_stride + c * col_stride]; }
};

void pack_panel(const StridedView& b, std::size_t inner, std::size_t col0, std::size_t width,
                std::vector<double>& panel) {
  for (std::size_t k = 0; k < inner; ++k) {
    double* dst = panel.data() + k * kColBlock;
    for (std::size_t j = 0; j < width; ++j) dst[j] = b.at(k, col0 + j);
    for (std::size_t j = width; j < kColBlock; ++j) dst[j] = 0.0;
  }
}

void full_block(const StridedView& a, std::size_t row0, const double* panel, std::size_t inner,
                double* out, std::size_t ldc, std::size_t width) {
  double acc[kRowBlock][kColBlock] = {};
  for (std::size_t k = 0; k < inner; ++k) {
    const double* bk = panel + k * kColBlock;
    for (std::size_t r = 0; r < kRowBlock; ++r) {
      const double av = a.at(row0 + r, k);
      for (std::size_t j = 0; j < kColBlock; ++j) acc[r][j] = std::fma(av, bk[j], acc[r][j]);
    }
  }
  for (std::size_t r = 0; r < kRowBlock; ++r)
    std::copy_n(acc[r], width, out + (row0 + r) * ldc);
}

void single_row(const StridedView& a, std::size_t row, const double* panel, std::size_t inner,
                double* out, std::size_t ldc, std::size_t width) {
  double acc[kColBlock] = {};
  for (std::size_t k = 0; k < inner; ++k) {
    const double av = a.at(row, k);
    const double* bk = panel + k * kColBlock;
    for (std::size_t j = 0; j < kColBlock; ++j) acc[j] = std::fma(av, bk[j], acc[j]);
  }
  std::copy_n(acc, width, out + row * ldc);
}

Tensor gemm(const StridedView& a, const StridedView& b, std::size_t m, std::size_t inner,
            std::size_t n) {
  std::vector<double> out(m * n, 0.0);
  std::vector<double> panel(inner * kColBlock);
  for (std::size_t col0 = 0; col0 < n; col0 += kColBlock) {
    const std::size_t width = std::min(kColBlock, n - col0);
    pack_panel(b, inner, col0, width, panel);
    double* out_panel = out.data() + col0;
    std::size_t row = 0;
    for (; row + kRowBlock <= m; row += kRowBlock)
      full_block(a, row, panel.data(), inner, out_panel, n, width);
    for (; row < m; ++row) single_row(a, row, panel.data(), inner, out_panel, n, width);
  }
  // The Tensor constructor rejects overflow to infinity.
  return Tensor(m, n, std::move(out));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_shape(a.cols() == b.rows(), "matmul", a, b);
  return gemm({a.data().data(), a.cols(), 1}, {b.data().data(), b.cols(), 1}, a.rows(), a.cols(),
              b.cols());
}

Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
  require_shape(a.rows() == b.rows(), "matmul_at_b", a, b);
  return gemm({a.data().data(), 1, a.cols()}, {b.data().data(), b.cols(), 1}, a.cols(), a.rows(),
              b.cols());
}

Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
  require_shape(a.cols() == b.cols(), "matmul_a_bt", a, b);
  return gemm({a.data().data(), a.cols(), 1}, {b.data().data(), 1, b.cols()}, a.rows(), a.cols(),
              b.rows());
}

Tensor transpose(const Tensor& t) {
  Tensor out(t.cols(), t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out(c, r) = t(r, c);
  return out;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ScalarFn ScalarFn::from_name(std::string_view name, double param) {
  if (name == "leaky_relu") return leaky_relu(param);
  if (name == "relu") return relu();
  if (name == "sigmoid") return sigmoid();
  if (name == "sign") return sign();
  if (name == "add") return add(param);
  if (name == "mul") return mul(param);
  throw ConfigError("unknown scalar function '" + std::string(name) + "'");
}

double ScalarFn::operator()(double x) const noexcept {
  switch (kind_) {
    case Kind::LeakyRelu:
      return x >= 0.0 ? x : param_ * x;
    case Kind::Relu:
      return x > 0.0 ? x : 0.0;
    case Kind::Sigmoid:
      return advaug::sigmoid(x);
    case Kind::Sign:
      return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Kind::Add:
      return x + param_;
    case Kind::Mul:
      return x * param_;
  }
  return x;
}

Tensor map(const Tensor& t, const ScalarFn& f) {
  Tensor out(t.rows(), t.cols());
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  if (!all_finite(out)) throw NumericError("map produced a non-finite value");
  return out;
}

void add_row_vector(Tensor& t, const Tensor& row) {
  require_shape(row.rows() == 1 && row.cols() == t.cols(), "add_row_vector", t, row);
  auto b = row.data();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto dst = t.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += b[c];
  }
}

Tensor column_sums(const Tensor& t) {
  Tensor out(1, t.cols());
  auto dst = out.data();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto src = t.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_shape(a.same_shape(b), "hadamard", a, b);
  Tensor out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = x[i] * y[i];
  return out;
}

void add_in_place(Tensor& a, const Tensor& b) {
  require_shape(a.same_shape(b), "add_in_place", a, b);
  auto dst = a.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void scale_in_place(Tensor& a, double c) {
  for (double& v : a.data()) v *= c;
}

Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows) {
  Tensor out(rows.size(), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.rows())
      throw ShapeError("select_rows: row " + std::to_string(rows[i]) + " out of range for " +
                       t.shape_string());
    auto src = t.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  require_shape(a.cols() == b.cols(), "concat_rows", a, b);
  Tensor out(a.rows() + b.rows(), a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<long>(a.size()));
  return out;
}

bool all_finite(const Tensor& t) noexcept {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

double max_abs(const Tensor& t) noexcept {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

double norm(const Tensor& t) noexcept {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace advaug
