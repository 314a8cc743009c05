#pragma once

#include <functional>
#include <span>
#include <vector>

#include "punk/tensor.hpp"

namespace punk {

struct GradCheckOptions {
  double eps = 1e-4;
  // Denominator floor. Central differences carry ~1e-11 of roundoff at
  // eps = 1e-4, so gradients that are exactly zero need a floor well above it.
  double floor = 1e-6;
  // Returns the distance of the model at `point` from the nearest
  // non-differentiable switch (ReLU or max-pool). Coordinates whose
  // perturbed points fall within 10 * eps of one are left out.
  std::function<double(std::span<const double>)> kink_margin;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
};

// Central differences against `analytic`; error per coordinate is
// |a - n| / max(floor, |a| + |n|).
GradCheckResult grad_check(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> point, std::span<const double> analytic,
    const GradCheckOptions& options = {});

template <class Model>
std::vector<double> flatten_values(Model& model) {
  std::vector<double> out;
  model.visit([&](const std::string&, Param& p) {
    out.insert(out.end(), p.value.data(), p.value.data() + p.value.size());
  });
  return out;
}

template <class Model>
std::vector<double> flatten_grads(Model& model) {
  std::vector<double> out;
  model.visit([&](const std::string&, Param& p) {
    out.insert(out.end(), p.grad.data(), p.grad.data() + p.grad.size());
  });
  return out;
}

template <class Model>
void assign_values(Model& model, std::span<const double> values) {
  std::size_t k = 0;
  model.visit([&](const std::string&, Param& p) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = values[k++];
  });
}

// Checks the gradients a model accumulates. `loss` evaluates the scalar
// objective and, when asked, accumulates parameter gradients; `margin`
// reports the current distance to a kink (may be empty).
template <class Model>
GradCheckResult grad_check_params(Model& model,
                                  const std::function<double(bool)>& loss,
                                  const std::function<double()>& margin = {},
                                  double eps = 1e-4) {
  zero_grads(model);
  loss(true);
  const std::vector<double> analytic = flatten_grads(model);
  const std::vector<double> point = flatten_values(model);
  GradCheckOptions opt;
  opt.eps = eps;
  if (margin) {
    opt.kink_margin = [&](std::span<const double> x) {
      assign_values(model, x);
      return margin();
    };
  }
  auto result = grad_check(
      [&](std::span<const double> x) {
        assign_values(model, x);
        return loss(false);
      },
      point, analytic, opt);
  assign_values(model, point);
  return result;
}

}  // namespace punk
