#pragma once

#include <vector>

#include "punk/tensor.hpp"

namespace punk {

struct LossGrad {
  double loss = 0.0;
  double grad = 0.0;  // dL/dlogit
};

// -[y log p + (1 - y) log(1 - p)] with p = sigmoid(logit), computed stably.
LossGrad sigmoid_bce(double logit, double target);

struct PrototypeLossResult {
  double loss = 0.0;              // mean over queries
  Matrix grad_queries;            // Q x D
  Matrix grad_prototypes;         // C x D
  std::vector<int> predictions;   // argmin distance per query
};

// Cross-entropy of softmax(-||q - p_c||^2) against the gold class, averaged
// over the query rows.
PrototypeLossResult prototype_loss(const Matrix& queries,
                                   const std::vector<int>& gold,
                                   const Matrix& prototypes);

}  // namespace punk
