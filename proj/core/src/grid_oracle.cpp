#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "energyecon/numerics.hpp"

namespace energyecon::numerics {

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ENERGYECON_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) return std::min<unsigned>(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

namespace {

struct Partial {
  std::size_t best_index = 0;
  double best_value = 0.0;
  bool found = false;
  std::size_t feasible = 0;
};

}  // namespace

GridOracleResult grid_oracle(const GridOracleRequest& request) {
  const std::size_t dims = request.lower.size();
  if (dims == 0 || dims > 4 || request.upper.size() != dims) {
    throw Error(ErrorCode::kInvalidArgument, "grid_oracle: dimensionality must be 1..4");
  }
  if (request.resolution < 2) throw Error(ErrorCode::kInvalidArgument, "grid_oracle: resolution must be >= 2");
  for (std::size_t d = 0; d < dims; ++d) {
    if (!std::isfinite(request.lower[d]) || !std::isfinite(request.upper[d]) ||
        request.upper[d] < request.lower[d]) {
      throw Error(ErrorCode::kInvalidArgument, "grid_oracle: box bounds must be finite and ordered");
    }
  }

  const auto res = static_cast<std::size_t>(request.resolution);
  std::size_t total = 1;
  for (std::size_t d = 0; d < dims; ++d) total *= res;

  auto coordinate = [&](std::size_t d, std::size_t i) {
    if (i + 1 == res) return request.upper[d];
    double t = static_cast<double>(i) / static_cast<double>(res - 1);
    return request.lower[d] + t * (request.upper[d] - request.lower[d]);
  };
  auto decode = [&](std::size_t flat, double* point) {
    // Last axis varies fastest, so flat order is lexicographic.
    for (std::size_t d = dims; d-- > 0;) {
      point[d] = coordinate(d, flat % res);
      flat /= res;
    }
  };
  const bool maximize = request.sense == Sense::kMaximize;
  auto better = [&](double a, double b) { return maximize ? a > b : a < b; };

  unsigned workers = request.workers == 0 ? worker_count() : request.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
  std::vector<Partial> partials(workers);
  auto scan = [&](unsigned w) {
    std::size_t begin = total * w / workers;
    std::size_t end = total * (w + 1) / workers;
    double point[4];
    Partial& part = partials[w];
    for (std::size_t flat = begin; flat < end; ++flat) {
      decode(flat, point);
      std::span<const double> view(point, dims);
      if (request.feasible && !request.feasible(view)) continue;
      double value = request.objective(view);
      if (std::isnan(value)) continue;
      ++part.feasible;
      if (!part.found || better(value, part.best_value)) {
        part.found = true;
        part.best_value = value;
        part.best_index = flat;
      }
    }
  };
  if (workers == 1) {
    scan(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(scan, w);
    for (auto& t : pool) t.join();
  }

  // Chunks are contiguous and in index order, so a strict comparison keeps
  // the lowest index among equal values.
  GridOracleResult result;
  result.evaluated_points = total;
  bool found = false;
  std::size_t best_index = 0;
  for (const Partial& part : partials) {
    result.feasible_points += part.feasible;
    if (!part.found) continue;
    if (!found || better(part.best_value, result.value)) {
      found = true;
      result.value = part.best_value;
      best_index = part.best_index;
    }
  }
  if (!found) throw Error(ErrorCode::kNoFeasibleGridPoint, "grid_oracle: no feasible grid point");
  double point[4];
  decode(best_index, point);
  result.point = Eigen::Map<Vector>(point, static_cast<Eigen::Index>(dims));
  return result;
}

}  // namespace energyecon::numerics
