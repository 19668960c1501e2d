#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advaug/tensor.hpp"

namespace advaug {

/// Analytic-vs-finite-difference verification over randomly drawn small
/// networks. Each trial checks the three losses with respect to their
/// logits and the composite loss
///   CE(logits) + BCE(D(z), tags) + beta * (-log D(z))
/// with respect to every parameter tensor (requested alone and together) and
/// the input.
struct GradcheckOptions {
  std::uint64_t seed = 1;
  std::size_t trials = 50;
  /// Negative control: scales one analytic derivative by 1.001 so the check
  /// must fail.
  bool corrupt_derivative = false;
};

inline constexpr double kGradcheckTolerance = 1e-5;

struct GradcheckResult {
  std::string name;  ///< "trial 3 network enc.0.w" etc.
  double relative_error = 0.0;
};

struct GradcheckReport {
  std::size_t checks = 0;
  GradcheckResult worst;
  std::vector<GradcheckResult> failures;

  bool passed() const { return failures.empty(); }
};

GradcheckReport run_gradcheck(const GradcheckOptions& options);

/// ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8) in the
/// Frobenius norm.
double relative_error(const Tensor& analytic, const Tensor& numeric);

/// Central differences of `f` with respect to every element of `x`, which
/// is perturbed in place and restored.
Tensor central_difference(const std::function<double()>& f, Tensor& x, double h);

}  // namespace advaug
