#include <cmath>

#include "energyecon/numerics.hpp"

namespace energyecon::numerics {

Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& point,
                            double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "finite_diff_gradient: step must be > 0");
  Vector grad(point.size());
  Vector probe = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + step;
    double up = f(probe);
    probe[i] = point[i] - step;
    double down = f(probe);
    probe[i] = point[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorCode::kNonFiniteEvaluation, "finite_diff_gradient: non-finite evaluation");
    }
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double finite_diff_derivative(const std::function<double(double)>& f, double x, double step) {
  Vector p(1);
  p[0] = x;
  return finite_diff_gradient([&](const Vector& v) { return f(v[0]); }, p, step)[0];
}

double log_elasticity(const std::function<double(double)>& g, double x, double relative_step) {
  if (!(x > 0.0)) throw Error(ErrorCode::kDomainError, "log_elasticity: point must be > 0");
  double up = g(x * (1.0 + relative_step));
  double down = g(x * (1.0 - relative_step));
  if (!(up > 0.0) || !(down > 0.0) || !std::isfinite(up) || !std::isfinite(down)) {
    throw Error(ErrorCode::kNonFiniteEvaluation, "log_elasticity: function must stay positive");
  }
  return (std::log(up) - std::log(down)) /
         (std::log1p(relative_step) - std::log1p(-relative_step));
}

}  // namespace energyecon::numerics
