#include <string>

#include "energyecon/numerics.hpp"

namespace energyecon::numerics {

std::vector<std::string> SolverSettings::violations() const {
  std::vector<std::string> out;
  if (!(tolerance > 0.0)) out.push_back("solver.tol: must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) out.push_back("solver.damping: must lie in (0,1]");
  if (max_iterations < 1) out.push_back("solver.max_iter: must be >= 1");
  if (grid_resolution < 2) out.push_back("solver.grid: must be >= 2");
  if (!(fd_step > 0.0 && fd_step < 0.5)) out.push_back("solver.fd_step: must lie in (0,0.5)");
  return out;
}

FixedPointResult fixed_point_iterate(const std::function<Vector(const Vector&)>& map,
                                     const Vector& start, const SolverSettings& settings) {
  FixedPointResult result;
  Vector x = start;
  double best = kInf;
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    Vector fx = map(x);
    if (fx.size() != x.size() || !fx.allFinite()) {
      throw Error(ErrorCode::kNonFiniteEvaluation, "fixed_point_iterate: map produced a non-finite point");
    }
    double residual = (x - fx).lpNorm<Eigen::Infinity>();
    if (residual < best) {
      best = residual;
      result.point = x;
      result.residual = residual;
      result.iterations = iter;
    }
    if (residual < settings.tolerance) {
      result.status = Status::kOk;
      return result;
    }
    x = (1.0 - settings.damping) * x + settings.damping * fx;
  }
  result.status = Status::kNoConvergence;
  return result;
}

}  // namespace energyecon::numerics
