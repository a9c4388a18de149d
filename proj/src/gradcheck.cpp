#include "hyrank/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hyrank {

double grad_check(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                  double h) {
  auto eval = [&] {
    double v = loss();
    if (!std::isfinite(v)) throw NumericError("non-finite loss during gradient check");
    return v;
  };
  double max_rel = 0.0;
  for (ParamTensor* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      double saved = p->values[i];
      p->values[i] = saved + h;
      double up = eval();
      p->values[i] = saved - h;
      double down = eval();
      p->values[i] = saved;
      double numeric = (up - down) / (2.0 * h);
      double analytic = p->grad[i];
      double rel = std::abs(analytic - numeric) /
                   std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace hyrank
