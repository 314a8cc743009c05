#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>

#include "punk/rng.hpp"

namespace punk {

// Row-major so a window of k consecutive token rows is one contiguous block.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A learned tensor and its gradient slot (always the same shape).
struct Param {
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols)
      : value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  std::size_t size() const { return static_cast<std::size_t>(value.size()); }

  // Column view for (n x 1) bias parameters.
  auto vec() { return Eigen::Map<Vector>(value.data(), value.size()); }
  auto vec() const { return Eigen::Map<const Vector>(value.data(), value.size()); }
  auto grad_vec() { return Eigen::Map<Vector>(grad.data(), grad.size()); }
};

using ParamVisitor = std::function<void(const std::string& name, Param& param)>;

// uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); fan_out = rows,
// fan_in = cols.
void glorot_uniform(Param& param, Rng& rng);

template <class Model>
std::size_t count_parameters(Model& model) {
  std::size_t n = 0;
  model.visit([&](const std::string&, Param& p) { n += p.size(); });
  return n;
}

template <class Model>
void zero_grads(Model& model) {
  model.visit([](const std::string&, Param& p) { p.zero_grad(); });
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace punk
