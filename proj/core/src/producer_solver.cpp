#include "energyecon/producer_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "energyecon/cost.hpp"

namespace energyecon {

using numerics::Constraint;
using numerics::KktOptions;
using numerics::NlpProblem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Targets within this log-distance of the production frontier are solved
// at the frontier allocation itself.
constexpr double kFrontier = 1e-7;

// One decision variable x_{l,k} of a single period.
struct Slot {
  std::size_t good;
  std::size_t mover;
};

struct PeriodLayout {
  std::vector<Slot> slots;
  std::vector<std::size_t> active_goods;             // goods with a positive target
  std::vector<std::vector<Eigen::Index>> good_slots;  // per active good
  std::vector<std::vector<Eigen::Index>> mover_slots; // per prime mover
};

PeriodLayout layout_for(const ProducerProblem& p, int t) {
  PeriodLayout lay;
  const std::size_t L = p.num_prime_movers();
  lay.mover_slots.resize(L);
  for (std::size_t k = 0; k < p.num_goods(); ++k) {
    double target = p.targets(static_cast<Eigen::Index>(k), t);
    if (!(target > 0.0)) continue;
    const ProductionTech* tech = p.technologies[k];
    if (tech == nullptr) {
      throw Error(ErrorCode::kInfeasible, "producer: good " + p.good_ids[k] + " has a target but no technology");
    }
    std::vector<Eigen::Index> own;
    for (std::size_t l = 0; l < L; ++l) {
      if (tech->coefficients[l] <= 0.0) continue;
      if (p.endowments(static_cast<Eigen::Index>(l), t) <= 0.0) {
        if (tech->form == TechForm::kCobbDouglas) {
          throw Error(ErrorCode::kInfeasible, "producer: good " + p.good_ids[k] + " needs prime mover " +
                                                  p.prime_mover_ids[l] + " which has no endowment in period " +
                                                  std::to_string(t + 1));
        }
        continue;
      }
      auto idx = static_cast<Eigen::Index>(lay.slots.size());
      lay.slots.push_back({k, l});
      own.push_back(idx);
      lay.mover_slots[l].push_back(idx);
    }
    if (own.empty()) {
      throw Error(ErrorCode::kInfeasible, "producer: no usable prime mover for good " + p.good_ids[k] +
                                              " in period " + std::to_string(t + 1));
    }
    lay.active_goods.push_back(k);
    lay.good_slots.push_back(std::move(own));
  }
  return lay;
}

// Log output of a CobbDouglas good from the decision vector, with gradient
// and Hessian restricted to the good's own slots.
double log_output(const ProductionTech& tech, const PeriodLayout& lay, const std::vector<Eigen::Index>& own,
                  const Vector& x) {
  double v = std::log(tech.scale);
  for (Eigen::Index i : own) {
    if (!(x[i] > 0.0)) return -numerics::kInf;
    v += tech.coefficients[lay.slots[i].mover] * std::log(x[i]);
  }
  return v;
}

double linear_output(const ProductionTech& tech, const PeriodLayout& lay, const std::vector<Eigen::Index>& own,
                     const Vector& x) {
  double v = 0.0;
  for (Eigen::Index i : own) v += tech.coefficients[lay.slots[i].mover] * x[i];
  return tech.scale * v;
}

// Target constraint for good `g` (index into active_goods). `shift` is an
// additive term on the constraint value, used by the feasibility pre-solve.
Constraint target_constraint(const ProductionTech& tech, const PeriodLayout& lay, std::size_t g, double target,
                             Eigen::Index dimension, std::optional<Eigen::Index> log_ratio_var) {
  const std::vector<Eigen::Index>& own = lay.good_slots[g];
  Constraint c;
  c.kind = Constraint::Kind::kLessEqual;
  if (tech.form == TechForm::kCobbDouglas) {
    const double log_target = std::log(target);
    c.value = [&tech, &lay, &own, log_target, log_ratio_var](const Vector& x) {
      double shift = log_ratio_var ? x[*log_ratio_var] : 0.0;
      return log_target + shift - log_output(tech, lay, own, x);
    };
    c.gradient = [&tech, &lay, &own, dimension, log_ratio_var](const Vector& x) {
      Vector grad = Vector::Zero(dimension);
      for (Eigen::Index i : own) grad[i] = -tech.coefficients[lay.slots[i].mover] / x[i];
      if (log_ratio_var) grad[*log_ratio_var] = 1.0;
      return grad;
    };
    c.hessian = [&tech, &lay, &own, dimension](const Vector& x) {
      Matrix h = Matrix::Zero(dimension, dimension);
      for (Eigen::Index i : own) h(i, i) = tech.coefficients[lay.slots[i].mover] / (x[i] * x[i]);
      return h;
    };
  } else {
    c.value = [&tech, &lay, &own, target, log_ratio_var](const Vector& x) {
      double scaled = log_ratio_var ? target * std::exp(x[*log_ratio_var]) : target;
      return scaled - linear_output(tech, lay, own, x);
    };
    c.gradient = [&tech, &lay, &own, target, dimension, log_ratio_var](const Vector& x) {
      Vector grad = Vector::Zero(dimension);
      for (Eigen::Index i : own) grad[i] = -tech.scale * tech.coefficients[lay.slots[i].mover];
      if (log_ratio_var) grad[*log_ratio_var] = target * std::exp(x[*log_ratio_var]);
      return grad;
    };
    if (log_ratio_var) {
      c.hessian = [target, dimension, log_ratio_var](const Vector& x) {
        Matrix h = Matrix::Zero(dimension, dimension);
        h(*log_ratio_var, *log_ratio_var) = target * std::exp(x[*log_ratio_var]);
        return h;
      };
    }
  }
  return c;
}

Constraint capacity_constraint(const std::vector<Eigen::Index>& slots, double endowment, Eigen::Index dimension) {
  Vector a = Vector::Zero(dimension);
  for (Eigen::Index i : slots) a[i] = 1.0;
  return numerics::linear_constraint(a, endowment);
}

// Interior start: each good's cost-minimizing bundle at prices eps, scaled
// down per prime mover to fit its endowment. Tiny targets then start close
// to their (tiny) optimum instead of at a capacity split.
Vector interior_start(const ProducerProblem& p, const PeriodLayout& lay, int t, Eigen::Index dimension) {
  const std::size_t L = p.num_prime_movers();
  Vector x = Vector::Zero(dimension);
  std::vector<double> demand(L, 0.0);
  for (std::size_t g = 0; g < lay.active_goods.size(); ++g) {
    std::size_t k = lay.active_goods[g];
    const ProductionTech& tech = *p.technologies[k];
    std::vector<double> prices(p.epsilon);
    if (tech.form == TechForm::kLinear) {
      // Spread Linear output over every usable input.
      double rate = 0.0;
      for (Eigen::Index i : lay.good_slots[g]) rate += tech.scale * tech.coefficients[lay.slots[i].mover];
      for (Eigen::Index i : lay.good_slots[g]) x[i] = p.targets(static_cast<Eigen::Index>(k), t) / rate;
    } else {
      CostMinimum c = cost_min(tech, prices, p.targets(static_cast<Eigen::Index>(k), t));
      for (Eigen::Index i : lay.good_slots[g]) x[i] = c.inputs[lay.slots[i].mover];
    }
    for (Eigen::Index i : lay.good_slots[g]) demand[lay.slots[i].mover] += x[i];
  }
  for (std::size_t l = 0; l < L; ++l) {
    double cap = p.endowments(static_cast<Eigen::Index>(l), t);
    double scale = demand[l] > 0.9 * cap ? 0.9 * cap / demand[l] : 1.0;
    for (Eigen::Index i : lay.mover_slots[l]) x[i] = std::max(x[i] * scale, 1e-12 * std::max(1.0, cap));
  }
  return x;
}

struct FeasibilityCheck {
  double log_ratio = 0.0;  // ln of the largest r with f_k >= r * target_k for all k
  Vector x;                // the allocation attaining it
};

FeasibilityCheck max_feasible_log_ratio(const ProducerProblem& p, const PeriodLayout& lay, int t) {
  const auto n = static_cast<Eigen::Index>(lay.slots.size());
  const Eigen::Index dim = n + 1;
  const Eigen::Index r_var = n;
  NlpProblem nlp;
  nlp.dimension = dim;
  nlp.objective = [r_var](const Vector& x) { return -x[r_var]; };
  nlp.gradient = [dim, r_var](const Vector&) {
    Vector g = Vector::Zero(dim);
    g[r_var] = -1.0;
    return g;
  };
  nlp.lower = Vector::Constant(dim, 0.0);
  nlp.lower[r_var] = -numerics::kInf;
  for (std::size_t g = 0; g < lay.active_goods.size(); ++g) {
    std::size_t k = lay.active_goods[g];
    nlp.constraints.push_back(target_constraint(*p.technologies[k], lay, g,
                                                p.targets(static_cast<Eigen::Index>(k), t), dim, r_var));
  }
  for (std::size_t l = 0; l < lay.mover_slots.size(); ++l) {
    if (lay.mover_slots[l].empty()) continue;
    nlp.constraints.push_back(
        capacity_constraint(lay.mover_slots[l], p.endowments(static_cast<Eigen::Index>(l), t), dim));
  }
  Vector start = Vector::Zero(dim);
  start.head(n) = interior_start(p, lay, t, n);
  double worst = numerics::kInf;
  for (std::size_t g = 0; g < lay.active_goods.size(); ++g) {
    std::size_t k = lay.active_goods[g];
    const ProductionTech& tech = *p.technologies[k];
    double out = tech.form == TechForm::kCobbDouglas ? std::exp(log_output(tech, lay, lay.good_slots[g], start))
                                                      : linear_output(tech, lay, lay.good_slots[g], start);
    worst = std::min(worst, std::log(out / p.targets(static_cast<Eigen::Index>(k), t)));
  }
  start[r_var] = worst - 1.0;
  auto res = numerics::kkt_solve(nlp, start, KktOptions{1e-13, p.max_iterations, 1e-10});
  return {res.x[r_var], res.x.head(n).cwiseMax(0.0)};
}

// Targets on the production frontier leave a single feasible allocation
// and a ray of multipliers (tau_k, phi_l) solving tau_k f_{l,k} = eps_l +
// phi_l. Pick the point of the ray with the smallest scarcity costs.
void frontier_multipliers(const ProducerProblem& p, const PeriodLayout& lay, int t, const Vector& x,
                          std::vector<double>& tau, std::vector<double>& phi) {
  const std::size_t G = lay.active_goods.size();
  const std::size_t L = p.num_prime_movers();
  std::vector<Eigen::Index> phi_col(L, -1);
  Eigen::Index cols = static_cast<Eigen::Index>(G);
  for (std::size_t l = 0; l < L; ++l) {
    if (!lay.mover_slots[l].empty()) phi_col[l] = cols++;
  }
  std::vector<std::pair<std::size_t, Eigen::Index>> rows;  // (active good, slot)
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index i : lay.good_slots[g]) {
      if (x[i] > 1e-12 * std::max(1.0, p.endowments(static_cast<Eigen::Index>(lay.slots[i].mover), t))) {
        rows.emplace_back(g, i);
      }
    }
  }
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), cols);
  Vector rhs(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto [g, i] = rows[r];
    std::size_t k = lay.active_goods[g];
    std::size_t l = lay.slots[i].mover;
    const ProductionTech& tech = *p.technologies[k];
    double marginal = tech.scale * tech.coefficients[l];
    if (tech.form == TechForm::kCobbDouglas) {
      marginal = tech.coefficients[l] * std::exp(log_output(tech, lay, lay.good_slots[g], x)) / x[i];
    }
    auto ri = static_cast<Eigen::Index>(r);
    a(ri, static_cast<Eigen::Index>(g)) = marginal;
    a(ri, phi_col[l]) = -1.0;
    rhs[ri] = p.epsilon[l];
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  double cutoff = 1e-10 * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
  // On the frontier the multipliers form a ray, so a square or tall system
  // is singular up to rounding and the polish residue; a clearly separated
  // last singular value is that ray.
  if (sv.size() == cols && cols >= 2 && sv[cols - 1] < 1e-3 * sv[0]) {
    cutoff = std::max(cutoff, std::sqrt(sv[cols - 1] * sv[cols - 2]));
  }
  svd.setThreshold(cutoff / std::max(1.0, sv.size() > 0 ? sv[0] : 0.0));
  Vector z = svd.solve(rhs);  // minimum-norm solution
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv[i] > cutoff ? 1 : 0;
  if (cols - rank == 1) {
    Vector v = svd.matrixV().col(cols - 1);
    double sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      if (phi_col[l] >= 0) sum += v[phi_col[l]];
    }
    if (sum < 0.0) v = -v;
    // Slide along the ray until the smallest scarcity cost reaches zero.
    double shift = -numerics::kInf;
    bool monotone = true;
    for (std::size_t l = 0; l < L; ++l) {
      if (phi_col[l] < 0) continue;
      double dir = v[phi_col[l]];
      if (dir <= 1e-14) {
        monotone = false;
        continue;
      }
      shift = std::max(shift, -z[phi_col[l]] / dir);
    }
    if (monotone && std::isfinite(shift)) z += shift * v;
  }
  for (std::size_t g = 0; g < G; ++g) tau[lay.active_goods[g]] = z[static_cast<Eigen::Index>(g)];
  for (std::size_t l = 0; l < L; ++l) {
    if (phi_col[l] >= 0) phi[l] = std::max(0.0, z[phi_col[l]]);
  }
}

// Refines a frontier allocation together with its multipliers by solving
// stationarity on used slots, binding targets and binding capacities as one
// square system in log inputs. The multiplier block is rank deficient along
// the frontier ray, so steps are minimum-norm least squares.
void polish_frontier(const ProducerProblem& p, const PeriodLayout& lay, int t, Vector& x,
                     const std::vector<double>& tau, const std::vector<double>& phi) {
  const std::size_t G = lay.active_goods.size();
  const std::size_t L = p.num_prime_movers();
  std::vector<Eigen::Index> used;
  std::vector<Eigen::Index> col_of(lay.slots.size(), -1);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(lay.slots.size()); ++i) {
    if (x[i] > 1e-12 * std::max(1.0, p.endowments(static_cast<Eigen::Index>(lay.slots[i].mover), t))) {
      col_of[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(used.size());
      used.push_back(i);
    }
  }
  const auto nu = static_cast<Eigen::Index>(used.size());
  std::vector<std::size_t> slot_good(lay.slots.size(), 0);
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index i : lay.good_slots[g]) slot_good[static_cast<std::size_t>(i)] = g;
  }
  std::vector<Eigen::Index> phi_col(L, -1);
  Eigen::Index cols = nu + static_cast<Eigen::Index>(G);
  for (std::size_t l = 0; l < L; ++l) {
    double cap = p.endowments(static_cast<Eigen::Index>(l), t);
    double total = 0.0;
    for (Eigen::Index i : lay.mover_slots[l]) total += x[i];
    if (!lay.mover_slots[l].empty() && total >= cap * (1.0 - 1e-6)) phi_col[l] = cols++;
  }

  Vector z(cols);
  for (Eigen::Index c = 0; c < nu; ++c) z[c] = std::log(x[used[static_cast<std::size_t>(c)]]);
  for (std::size_t g = 0; g < G; ++g) z[nu + static_cast<Eigen::Index>(g)] = tau[lay.active_goods[g]];
  for (std::size_t l = 0; l < L; ++l) {
    if (phi_col[l] >= 0) z[phi_col[l]] = phi[l];
  }

  auto system = [&](const Vector& v, Vector& f, Matrix& jac) {
    const Eigen::Index rows = cols;
    f = Vector::Zero(rows);
    jac = Matrix::Zero(rows, cols);
    std::vector<double> log_out(G, 0.0);
    std::vector<double> lin_out(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
      const ProductionTech& tech = *p.technologies[lay.active_goods[g]];
      double lo = std::log(tech.scale);
      double lin = 0.0;
      for (Eigen::Index i : lay.good_slots[g]) {
        Eigen::Index c = col_of[static_cast<std::size_t>(i)];
        double a = tech.coefficients[lay.slots[i].mover];
        if (c >= 0) {
          lo += a * v[c];
          lin += a * std::exp(v[c]);
        }
      }
      log_out[g] = lo;
      lin_out[g] = tech.scale * lin;
    }
    Eigen::Index row = 0;
    for (Eigen::Index c = 0; c < nu; ++c, ++row) {
      Eigen::Index i = used[static_cast<std::size_t>(c)];
      std::size_t g = slot_good[static_cast<std::size_t>(i)];
      std::size_t l = lay.slots[i].mover;
      const ProductionTech& tech = *p.technologies[lay.active_goods[g]];
      double a = tech.coefficients[l];
      double tg = v[nu + static_cast<Eigen::Index>(g)];
      double marginal = tech.form == TechForm::kCobbDouglas ? a * std::exp(log_out[g] - v[c]) : tech.scale * a;
      double ph = phi_col[l] >= 0 ? v[phi_col[l]] : phi[l];
      f[row] = tg * marginal - ph - p.epsilon[l];
      jac(row, nu + static_cast<Eigen::Index>(g)) = marginal;
      if (phi_col[l] >= 0) jac(row, phi_col[l]) = -1.0;
      if (tech.form == TechForm::kCobbDouglas) {
        for (Eigen::Index j : lay.good_slots[g]) {
          Eigen::Index cj = col_of[static_cast<std::size_t>(j)];
          if (cj >= 0) jac(row, cj) += tg * marginal * tech.coefficients[lay.slots[j].mover];
        }
        jac(row, c) -= tg * marginal;
      }
    }
    for (std::size_t g = 0; g < G; ++g, ++row) {
      std::size_t k = lay.active_goods[g];
      const ProductionTech& tech = *p.technologies[k];
      double log_target = std::log(p.targets(static_cast<Eigen::Index>(k), t));
      if (tech.form == TechForm::kCobbDouglas) {
        f[row] = log_out[g] - log_target;
        for (Eigen::Index j : lay.good_slots[g]) {
          Eigen::Index cj = col_of[static_cast<std::size_t>(j)];
          if (cj >= 0) jac(row, cj) = tech.coefficients[lay.slots[j].mover];
        }
      } else {
        f[row] = std::log(lin_out[g]) - log_target;
        for (Eigen::Index j : lay.good_slots[g]) {
          Eigen::Index cj = col_of[static_cast<std::size_t>(j)];
          if (cj >= 0) jac(row, cj) = tech.scale * tech.coefficients[lay.slots[j].mover] * std::exp(v[cj]) / lin_out[g];
        }
      }
    }
    for (std::size_t l = 0; l < L; ++l) {
      if (phi_col[l] < 0) continue;
      double cap = p.endowments(static_cast<Eigen::Index>(l), t);
      double total = 0.0;
      for (Eigen::Index i : lay.mover_slots[l]) {
        Eigen::Index c = col_of[static_cast<std::size_t>(i)];
        if (c < 0) continue;
        total += std::exp(v[c]);
        jac(row, c) = std::exp(v[c]) / cap;
      }
      f[row] = total / cap - 1.0;
      ++row;
    }
  };

  Vector f;
  Matrix jac;
  system(z, f, jac);
  double norm = f.lpNorm<Eigen::Infinity>();
  for (int iter = 0; iter < 50 && norm > 1e-14; ++iter) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jac);
    cod.setThreshold(1e-12);
    Vector step = cod.solve(-f);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vector trial = z + alpha * step;
      Vector tf;
      Matrix tj;
      system(trial, tf, tj);
      double tn = tf.lpNorm<Eigen::Infinity>();
      if (tf.allFinite() && tn < norm) {
        z = trial;
        f = tf;
        jac = tj;
        norm = tn;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
  for (Eigen::Index c = 0; c < nu; ++c) x[used[static_cast<std::size_t>(c)]] = std::exp(z[c]);
}

double tie_tolerance(double a, double b) { return 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

// The interior point splits Linear output evenly across equally cheap
// inputs. Move it to the lowest-index input when the capacities involved
// are slack, so that ties are resolved deterministically.
void purify_linear_ties(const ProducerProblem& p, int t, Matrix& alloc, std::span<const double> phi) {
  const std::size_t L = p.num_prime_movers();
  for (std::size_t k = 0; k < p.num_goods(); ++k) {
    const ProductionTech* tech = p.technologies[k];
    if (tech == nullptr || tech->form != TechForm::kLinear) continue;
    std::vector<double> unit(L, numerics::kInf);
    for (std::size_t l = 0; l < L; ++l) {
      if (tech->coefficients[l] > 0.0) unit[l] = (p.epsilon[l] + phi[l]) / (tech->scale * tech->coefficients[l]);
    }
    double best = *std::min_element(unit.begin(), unit.end());
    std::vector<std::size_t> tied;
    for (std::size_t l = 0; l < L; ++l) {
      if (std::isfinite(unit[l]) && std::abs(unit[l] - best) <= tie_tolerance(unit[l], best)) tied.push_back(l);
    }
    if (tied.size() < 2) continue;
    bool slack = std::all_of(tied.begin(), tied.end(), [&](std::size_t l) { return phi[l] <= 1e-9 * (1.0 + p.epsilon[l]); });
    if (!slack) continue;
    double output = 0.0;
    for (std::size_t l : tied) {
      output += tech->scale * tech->coefficients[l] * alloc(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
      alloc(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = 0.0;
    }
    for (std::size_t l : tied) {
      auto li = static_cast<Eigen::Index>(l);
      double used = alloc.row(li).sum();
      double room = std::max(0.0, p.endowments(li, t) - used);
      double rate = tech->scale * tech->coefficients[l];
      double take = std::min(room, output / rate);
      alloc(li, static_cast<Eigen::Index>(k)) = take;
      output -= take * rate;
      if (output <= 0.0) break;
    }
  }
}

}  // namespace

double ProducerResiduals::max() const { return std::max({stationarity, primal, dual, complementarity}); }

double ProducerSolution::total_objective() const {
  double sum = 0.0;
  for (double v : objective) sum += v;
  return sum;
}

ProducerResiduals ProducerSolution::worst_residuals() const {
  ProducerResiduals w;
  for (const auto& r : residuals) {
    w.stationarity = std::max(w.stationarity, r.stationarity);
    w.primal = std::max(w.primal, r.primal);
    w.dual = std::max(w.dual, r.dual);
    w.complementarity = std::max(w.complementarity, r.complementarity);
  }
  return w;
}

ProducerProblem make_producer_problem(const EconomyScenario& scenario, const Matrix& targets,
                                      const Matrix& endowments, std::vector<double> lambda) {
  ProducerProblem p;
  p.good_ids = scenario.good_ids();
  for (const auto& pm : scenario.prime_movers) p.prime_mover_ids.push_back(pm.id);
  auto owned = std::make_shared<std::vector<ProductionTech>>(scenario.technologies);
  for (const auto& id : p.good_ids) {
    auto it = std::find_if(owned->begin(), owned->end(), [&](const ProductionTech& t) { return t.good == id; });
    p.technologies.push_back(it == owned->end() ? nullptr : &*it);
  }
  p.owned_technologies = std::move(owned);
  p.epsilon = scenario.epsilon();
  p.targets = targets;
  p.endowments = endowments;
  p.lambda = std::move(lambda);
  p.acceptable = scenario.solver.tolerance;
  return p;
}

ProducerResiduals producer_residuals(const ProducerProblem& p, int t, const Matrix& alloc,
                                     std::span<const double> tau, std::span<const double> phi) {
  ProducerResiduals r;
  const std::size_t L = p.num_prime_movers();
  for (std::size_t l = 0; l < L; ++l) {
    auto li = static_cast<Eigen::Index>(l);
    double endow = p.endowments(li, t);
    double used = alloc.row(li).sum();
    r.primal = std::max(r.primal, used - endow);
    r.dual = std::max(r.dual, -phi[l]);
    r.complementarity = std::max(r.complementarity, std::abs(phi[l] * (endow - used)));
  }
  for (std::size_t k = 0; k < p.num_goods(); ++k) {
    auto ki = static_cast<Eigen::Index>(k);
    double target = p.targets(ki, t);
    const ProductionTech* tech = p.technologies[k];
    if (tech == nullptr || !(target > 0.0)) continue;
    std::vector<double> x(L);
    for (std::size_t l = 0; l < L; ++l) x[l] = alloc(static_cast<Eigen::Index>(l), ki);
    double out = production_output(*tech, x);
    r.primal = std::max(r.primal, target - out);
    for (std::size_t l = 0; l < L; ++l) {
      double a = tech->coefficients[l];
      if (a <= 0.0) continue;
      double marginal = tech->form == TechForm::kLinear ? tech->scale * a : (x[l] > 0.0 ? a * out / x[l] : numerics::kInf);
      double gap = tau[k] * marginal - p.epsilon[l] - phi[l];
      bool used = x[l] > 1e-9 * std::max(1.0, p.endowments(static_cast<Eigen::Index>(l), t));
      if (used) {
        r.stationarity = std::max(r.stationarity, std::abs(gap) / std::max(1.0, p.epsilon[l] + phi[l]));
      } else if (std::isfinite(gap)) {
        // Unused inputs must not be worth more than they cost.
        r.stationarity = std::max(r.stationarity, std::max(0.0, gap) / std::max(1.0, p.epsilon[l] + phi[l]));
      }
    }
  }
  return r;
}

ProducerSolution solve_transfer_min(const ProducerProblem& p) {
  const std::size_t K = p.num_goods();
  const std::size_t L = p.num_prime_movers();
  const int T = p.horizon();
  if (p.technologies.size() != K || p.epsilon.size() != L || p.endowments.rows() != static_cast<Eigen::Index>(L) ||
      p.targets.rows() != static_cast<Eigen::Index>(K) || p.endowments.cols() != T) {
    throw Error(ErrorCode::kInvalidArgument, "solve_transfer_min: inconsistent problem dimensions");
  }
  if (!p.lambda.empty()) {
    if (p.lambda.size() != static_cast<std::size_t>(T)) {
      throw Error(ErrorCode::kInvalidArgument, "solve_transfer_min: lambda schedule has wrong length");
    }
    for (double v : p.lambda) {
      if (!(v > 0.0)) throw Error(ErrorCode::kDomainError, "solve_transfer_min: lambda must be > 0");
    }
  }
  if ((p.targets.array() < 0.0).any() || (p.endowments.array() < 0.0).any()) {
    throw Error(ErrorCode::kDomainError, "solve_transfer_min: targets and endowments must be >= 0");
  }

  ProducerSolution sol;
  sol.tau = Matrix::Zero(static_cast<Eigen::Index>(K), T);
  sol.phi = Matrix::Zero(static_cast<Eigen::Index>(L), T);
  for (int t = 0; t < T; ++t) {
    PeriodLayout lay = layout_for(p, t);
    Matrix alloc = Matrix::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(K));
    std::vector<double> phi(L, 0.0);
    std::vector<double> tau(K, kNaN);
    ProducerResiduals res;
    int iterations = 0;

    if (!lay.active_goods.empty()) {
      FeasibilityCheck feasible = max_feasible_log_ratio(p, lay, t);
      if (feasible.log_ratio < std::log1p(-1e-9)) {
        throw Error(ErrorCode::kInfeasible, "producer: targets exceed what the endowments can produce in period " +
                                                std::to_string(t + 1));
      }
      const auto n = static_cast<Eigen::Index>(lay.slots.size());
      std::vector<double> demand(L, 0.0);
      std::vector<CostMinimum> separate;
      for (std::size_t k : lay.active_goods) {
        separate.push_back(cost_min(*p.technologies[k], p.epsilon, p.targets(static_cast<Eigen::Index>(k), t)));
        for (std::size_t l = 0; l < L; ++l) demand[l] += separate.back().inputs[l];
      }
      bool capacities_slack = true;
      for (std::size_t l = 0; l < L; ++l) {
        capacities_slack = capacities_slack && demand[l] <= p.endowments(static_cast<Eigen::Index>(l), t);
      }
      if (capacities_slack) {
        // No prime mover is scarce: every good is made at its own least cost.
        for (std::size_t g = 0; g < lay.active_goods.size(); ++g) {
          std::size_t k = lay.active_goods[g];
          for (std::size_t l = 0; l < L; ++l) {
            alloc(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = separate[g].inputs[l];
          }
          tau[k] = separate[g].marginal_cost;
        }
      } else if (feasible.log_ratio < kFrontier) {
        for (Eigen::Index i = 0; i < n; ++i) {
          alloc(static_cast<Eigen::Index>(lay.slots[i].mover), static_cast<Eigen::Index>(lay.slots[i].good)) =
              feasible.x[i];
        }
        frontier_multipliers(p, lay, t, feasible.x, tau, phi);
        Vector polished = feasible.x;
        polish_frontier(p, lay, t, polished, tau, phi);
        frontier_multipliers(p, lay, t, polished, tau, phi);
        for (Eigen::Index i = 0; i < n; ++i) {
          alloc(static_cast<Eigen::Index>(lay.slots[i].mover), static_cast<Eigen::Index>(lay.slots[i].good)) =
              polished[i];
        }
      } else {
        Vector cost(n);
        for (Eigen::Index i = 0; i < n; ++i) cost[i] = p.epsilon[lay.slots[i].mover];
        NlpProblem nlp;
        nlp.dimension = n;
        nlp.objective = [cost](const Vector& x) { return cost.dot(x); };
        nlp.gradient = [cost](const Vector&) { return cost; };
        nlp.lower = Vector::Zero(n);
        for (std::size_t g = 0; g < lay.active_goods.size(); ++g) {
          std::size_t k = lay.active_goods[g];
          nlp.constraints.push_back(target_constraint(*p.technologies[k], lay, g,
                                                      p.targets(static_cast<Eigen::Index>(k), t), n, std::nullopt));
        }
        std::vector<std::size_t> capacity_of;
        for (std::size_t l = 0; l < L; ++l) {
          if (lay.mover_slots[l].empty()) continue;
          capacity_of.push_back(l);
          nlp.constraints.push_back(
              capacity_constraint(lay.mover_slots[l], p.endowments(static_cast<Eigen::Index>(l), t), n));
        }
        Vector start = interior_start(p, lay, t, n);
        numerics::ProblemScaling scaling{start, 1.0};
        auto kkt = numerics::kkt_solve_scaled(nlp, start, scaling,
                                              KktOptions{p.tolerance, p.max_iterations, p.acceptable});
        iterations = kkt.iterations;
        if (kkt.status != Status::kOk) sol.status = Status::kNoConvergence;

        for (Eigen::Index i = 0; i < n; ++i) {
          alloc(static_cast<Eigen::Index>(lay.slots[i].mover), static_cast<Eigen::Index>(lay.slots[i].good)) =
              std::max(0.0, kkt.x[i]);
        }
        const std::size_t G = lay.active_goods.size();
        for (std::size_t c = 0; c < capacity_of.size(); ++c) {
          phi[capacity_of[c]] = kkt.multipliers[static_cast<Eigen::Index>(G + c)];
        }
        for (std::size_t g = 0; g < G; ++g) {
          std::size_t k = lay.active_goods[g];
          double z = kkt.multipliers[static_cast<Eigen::Index>(g)];
          tau[k] = p.technologies[k]->form == TechForm::kCobbDouglas ? z / p.targets(static_cast<Eigen::Index>(k), t)
                                                                     : z;
        }
      }
    }

    // Prime movers with no usable endowment: the smallest scarcity cost that
    // makes leaving them idle optimal.
    for (std::size_t l = 0; l < L; ++l) {
      if (!lay.mover_slots[l].empty()) continue;
      double value = 0.0;
      for (std::size_t k : lay.active_goods) {
        const ProductionTech& tech = *p.technologies[k];
        if (tech.form == TechForm::kLinear && tech.coefficients[l] > 0.0) {
          value = std::max(value, tau[k] * tech.scale * tech.coefficients[l] - p.epsilon[l]);
        }
      }
      phi[l] = value;
    }
    purify_linear_ties(p, t, alloc, phi);

    std::vector<double> prices(L);
    for (std::size_t l = 0; l < L; ++l) prices[l] = p.epsilon[l] + phi[l];
    for (std::size_t k = 0; k < K; ++k) {
      if (!std::isnan(tau[k])) continue;
      const ProductionTech* tech = p.technologies[k];
      tau[k] = tech == nullptr ? 0.0 : cost_min(*tech, prices, 0.0).marginal_cost;
    }

    res = producer_residuals(p, t, alloc, tau, phi);
    double objective = 0.0;
    for (std::size_t l = 0; l < L; ++l) objective += p.epsilon[l] * alloc.row(static_cast<Eigen::Index>(l)).sum();
    for (std::size_t k = 0; k < K; ++k) sol.tau(static_cast<Eigen::Index>(k), t) = tau[k];
    for (std::size_t l = 0; l < L; ++l) sol.phi(static_cast<Eigen::Index>(l), t) = phi[l];
    sol.allocations.push_back(std::move(alloc));
    sol.objective.push_back(objective);
    sol.residuals.push_back(res);
    sol.iterations.push_back(iterations);
  }
  return sol;
}

TransferComponents transfer_components(std::span<const double> epsilon, std::span<const double> phi,
                                       std::span<const double> requirements, std::span<const double> weights) {
  TransferComponents c;
  for (std::size_t l = 0; l < epsilon.size(); ++l) {
    if (weights[l] == 0.0) continue;
    c.psi += weights[l] * epsilon[l] * requirements[l];
    c.theta += weights[l] * phi[l] * requirements[l];
  }
  c.tau = c.psi + c.theta;
  return c;
}

TransferDecomposition decompose_marginal_transfer(const ProducerProblem& p, const ProducerSolution& s,
                                                  std::size_t good, int t, double step) {
  const std::size_t L = p.num_prime_movers();
  const auto k = static_cast<Eigen::Index>(good);
  const ProductionTech* tech = p.technologies.at(good);
  if (tech == nullptr || !(p.targets(k, t) > 0.0)) {
    throw Error(ErrorCode::kNonFiniteMarginal,
                "decompose_marginal_transfer: good " + p.good_ids[good] + " is not produced in period " +
                    std::to_string(t + 1));
  }
  const Matrix& alloc = s.allocations.at(static_cast<std::size_t>(t));
  std::vector<double> x(L), eps(p.epsilon), phi(L), prices(L);
  for (std::size_t l = 0; l < L; ++l) {
    x[l] = alloc(static_cast<Eigen::Index>(l), k);
    phi[l] = s.phi(static_cast<Eigen::Index>(l), t);
    prices[l] = eps[l] + phi[l];
  }

  TransferDecomposition d;
  d.good = p.good_ids[good];
  d.period = t;
  d.tau_kkt = s.tau(k, t);
  const double output = production_output(*tech, x);
  d.marginal_requirements.assign(L, numerics::kInf);
  d.marginal_shares.assign(L, 0.0);

  if (tech->form == TechForm::kCobbDouglas) {
    ProductionValue v = eval_production(*tech, x);
    d.marginal_requirements = v.marginal_requirements;
    d.marginal_shares = cost_min(*tech, prices, output).marginal_shares;
  } else {
    // The expansion path of a Linear technology runs along the input that
    // carries the most output; marginal requirements of the others are
    // still defined but carry no weight.
    std::size_t lead = L;
    for (std::size_t l = 0; l < L; ++l) {
      if (tech->coefficients[l] <= 0.0) continue;
      d.marginal_requirements[l] = 1.0 / (tech->scale * tech->coefficients[l]);
      if (lead == L || x[l] * tech->coefficients[l] > x[lead] * tech->coefficients[lead] * (1.0 + 1e-12)) lead = l;
    }
    d.marginal_shares[lead] = 1.0;
  }

  TransferComponents c = transfer_components(eps, phi, d.marginal_requirements, d.marginal_shares);
  d.psi = c.psi;
  d.theta = c.theta;
  d.tau = c.tau;

  double used_psi = 0.0, used_theta = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    if (!(x[l] > 1e-9 * std::max(1.0, p.endowments(static_cast<Eigen::Index>(l), t)))) continue;
    if (!std::isfinite(d.marginal_requirements[l])) continue;
    ++d.used_prime_movers;
    used_psi += eps[l] * d.marginal_requirements[l];
    used_theta += phi[l] * d.marginal_requirements[l];
  }
  if (d.used_prime_movers > 0) {
    d.psi_uniform = used_psi / d.used_prime_movers;
    d.theta_uniform = used_theta / d.used_prime_movers;
  }

  double spent = 0.0;
  for (std::size_t l = 0; l < L; ++l) spent += prices[l] * x[l];
  d.tau_avg = spent / output;
  auto average = [&](double q) { return cost_min(*tech, prices, q).cost / q; };
  d.mu = numerics::log_elasticity(average, output, step);
  return d;
}

}  // namespace energyecon
