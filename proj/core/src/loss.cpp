#include "punk/loss.hpp"

#include <cmath>

#include "punk/error.hpp"

namespace punk {

LossGrad sigmoid_bce(double logit, double target) {
  // softplus(z) - y z
  double softplus = logit > 0 ? logit + std::log1p(std::exp(-logit))
                              : std::log1p(std::exp(logit));
  return {softplus - target * logit, sigmoid(logit) - target};
}

PrototypeLossResult prototype_loss(const Matrix& queries,
                                   const std::vector<int>& gold,
                                   const Matrix& prototypes) {
  if (queries.rows() != static_cast<Eigen::Index>(gold.size())) {
    throw ValidationError("prototype_loss: one gold label per query required");
  }
  if (queries.cols() != prototypes.cols()) {
    throw ValidationError("prototype_loss: query/prototype dim mismatch");
  }
  const Eigen::Index Q = queries.rows();
  const Eigen::Index C = prototypes.rows();
  PrototypeLossResult r;
  r.grad_queries = Matrix::Zero(Q, queries.cols());
  r.grad_prototypes = Matrix::Zero(C, prototypes.cols());
  r.predictions.resize(static_cast<std::size_t>(Q));
  const double inv_q = 1.0 / static_cast<double>(Q);
  Vector logits(C);
  for (Eigen::Index q = 0; q < Q; ++q) {
    for (Eigen::Index c = 0; c < C; ++c) {
      logits[c] = -(queries.row(q) - prototypes.row(c)).squaredNorm();
    }
    Eigen::Index best = 0;
    double top = logits.maxCoeff(&best);
    r.predictions[static_cast<std::size_t>(q)] = static_cast<int>(best);
    Vector p = (logits.array() - top).exp().matrix();
    double z = p.sum();
    p /= z;
    const int y = gold[static_cast<std::size_t>(q)];
    r.loss += -(logits[y] - top - std::log(z)) * inv_q;
    for (Eigen::Index c = 0; c < C; ++c) {
      double dl = (p[c] - (c == y ? 1.0 : 0.0)) * inv_q;
      // d logit_c / d q = -2 (q - p_c);  d logit_c / d p_c = 2 (q - p_c)
      auto diff = (queries.row(q) - prototypes.row(c)).eval();
      r.grad_queries.row(q) += -2.0 * dl * diff;
      r.grad_prototypes.row(c) += 2.0 * dl * diff;
    }
  }
  return r;
}

}  // namespace punk
