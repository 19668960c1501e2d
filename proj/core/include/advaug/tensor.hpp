#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advaug {

/// Dense row-major matrix of doubles.
///
/// Every numeric quantity in the library (inputs, features, logits, weights,
/// gradients) is a Tensor; a vector is a 1 x n or n x 1 Tensor.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of `data`; throws ShapeError if its length is not
  /// rows * cols and NumericError if any value is not finite.
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

  /// "rows x cols", used in error messages.
  std::string shape_string() const;
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  /// Value equality (shape and every element compare equal).
  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Standard matrix product. Each output element is accumulated over the
/// inner index in ascending order as acc = fma(a_ik, b_kj, acc), starting
/// from +0, so results are bitwise reproducible.
Tensor matmul(const Tensor& a, const Tensor& b);
/// transpose(a) * b with the same accumulation order, without materializing
/// the transpose.
Tensor matmul_at_b(const Tensor& a, const Tensor& b);
/// a * transpose(b) with the same accumulation order.
Tensor matmul_a_bt(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& t);

/// Closed catalog of scalar functions usable with map().
class ScalarFn {
 public:
  enum class Kind { LeakyRelu, Relu, Sigmoid, Sign, Add, Mul };

  static ScalarFn leaky_relu(double slope) { return {Kind::LeakyRelu, slope}; }
  static ScalarFn relu() { return {Kind::Relu, 0.0}; }
  static ScalarFn sigmoid() { return {Kind::Sigmoid, 0.0}; }
  /// sign(0) == 0.
  static ScalarFn sign() { return {Kind::Sign, 0.0}; }
  static ScalarFn add(double c) { return {Kind::Add, c}; }
  static ScalarFn mul(double c) { return {Kind::Mul, c}; }

  /// Looks a function up by name ("leaky_relu", "relu", "sigmoid", "sign",
  /// "add", "mul"); `param` is the slope or constant where one applies.
  /// Throws ConfigError for unknown names.
  static ScalarFn from_name(std::string_view name, double param = 0.0);

  Kind kind() const noexcept { return kind_; }
  double param() const noexcept { return param_; }
  double operator()(double x) const noexcept;

 private:
  ScalarFn(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_;
};

/// Applies `f` to every element. Throws NumericError if a result is not finite.
Tensor map(const Tensor& t, const ScalarFn& f);

/// Numerically stable logistic function.
double sigmoid(double x) noexcept;

// Elementwise helpers used by the network and optimizer. All throw ShapeError
// on mismatched operands.

/// t[r, :] += row for every r; `row` is 1 x t.cols().
void add_row_vector(Tensor& t, const Tensor& row);
/// 1 x t.cols() tensor of column sums, each accumulated in ascending row order.
Tensor column_sums(const Tensor& t);
Tensor hadamard(const Tensor& a, const Tensor& b);
/// a += b
void add_in_place(Tensor& a, const Tensor& b);
/// a *= c
void scale_in_place(Tensor& a, double c);

/// New tensor holding the listed rows of `t` in the given order.
Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows);
/// Rows of `a` followed by rows of `b`.
Tensor concat_rows(const Tensor& a, const Tensor& b);

bool all_finite(const Tensor& t) noexcept;
double max_abs(const Tensor& t) noexcept;
/// Frobenius norm.
double norm(const Tensor& t) noexcept;

/// Throws ShapeError naming both shapes unless `ok`.
void require_shape(bool ok, std::string_view op, const Tensor& a, const Tensor& b);

}  // namespace advaug
