#include "punk/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "punk/error.hpp"

namespace punk {

GradCheckResult grad_check(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> point, std::span<const double> analytic,
    const GradCheckOptions& options) {
  if (point.size() != analytic.size()) {
    throw ValidationError("grad_check: gradient size does not match point");
  }
  GradCheckResult r;
  std::vector<double> x(point.begin(), point.end());
  const double eps = options.eps;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    bool skip = options.kink_margin && options.kink_margin(x) < 10.0 * eps;
    double up = fn(x);
    x[i] = orig - eps;
    skip = skip || (options.kink_margin && options.kink_margin(x) < 10.0 * eps);
    double down = fn(x);
    x[i] = orig;
    if (skip) {
      ++r.skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double err =
        std::abs(a - numeric) / std::max(options.floor, std::abs(a) + std::abs(numeric));
    r.max_rel_error = std::max(r.max_rel_error, err);
    ++r.compared;
  }
  return r;
}

}  // namespace punk
