#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "punk/error.hpp"
#include "punk/tensor.hpp"

namespace punk {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment slots are bound to parameters by visit
// order, so one optimizer must always step the same model.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

  // Applies one update from the accumulated gradients. Throws (without
  // touching any parameter) when a gradient is non-finite.
  template <class Model>
  void step(Model& model) {
    model.visit([&](const std::string& name, Param& p) {
      if (!p.grad.allFinite()) {
        throw Error("non-finite gradient in parameter " + name);
      }
    });
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    std::size_t slot = 0;
    model.visit([&](const std::string& name, Param& p) {
      if (slot == m_.size()) {
        m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
        v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      }
      Matrix& m = m_[slot];
      Matrix& v = v_[slot];
      if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
        throw Error("optimizer state does not match parameter " + name);
      }
      m = config_.beta1 * m + (1.0 - config_.beta1) * p.grad;
      v = config_.beta2 * v + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
      p.value.array() -= config_.lr * (m.array() / c1) /
                         ((v.array() / c2).sqrt() + config_.epsilon);
      ++slot;
    });
  }

  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace punk
