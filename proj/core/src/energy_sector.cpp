#include "energyecon/energy_sector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "energyecon/cost.hpp"

namespace energyecon {

using numerics::KktOptions;
using numerics::NlpProblem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Result of one period's value-weighted production problem
//   max sum_g value_g f_g(x_g) - prices' sum_g x_g,  sum_g x_g <= cap.
struct ValuePlan {
  Matrix inputs;                 // (l, g)
  std::vector<double> output;    // per g
  std::vector<double> marginal;  // producer-side marginal transfer per g
  std::vector<double> cap_multiplier;
  double stationarity = 0.0;
  bool converged = true;
};

ValuePlan maximize_value(const std::vector<const ProductionTech*>& techs, const std::vector<double>& value,
                         const std::vector<double>& prices, const std::vector<double>& cap, double acceptable,
                         int max_iterations) {
  const std::size_t G = techs.size();
  const std::size_t L = prices.size();
  ValuePlan plan;
  plan.inputs = Matrix::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(G));
  plan.output.assign(G, 0.0);
  plan.marginal.assign(G, 0.0);
  plan.cap_multiplier.assign(L, 0.0);

  struct Slot {
    std::size_t good, mover;
  };
  std::vector<Slot> slots;
  std::vector<std::vector<Eigen::Index>> own(G);
  std::vector<std::vector<Eigen::Index>> by_mover(L);
  for (std::size_t g = 0; g < G; ++g) {
    if (techs[g] == nullptr || !(value[g] > 0.0)) continue;
    const ProductionTech& tech = *techs[g];
    bool blocked = false;
    std::vector<Eigen::Index> mine;
    for (std::size_t l = 0; l < L; ++l) {
      if (tech.coefficients[l] <= 0.0) continue;
      if (!(cap[l] > 0.0)) {
        if (tech.form == TechForm::kCobbDouglas) blocked = true;
        continue;
      }
      mine.push_back(static_cast<Eigen::Index>(slots.size()));
      slots.push_back({g, l});
    }
    if (blocked || mine.empty()) {
      slots.resize(slots.size() - mine.size());
      continue;
    }
    for (Eigen::Index i : mine) by_mover[slots[i].mover].push_back(i);
    own[g] = std::move(mine);
  }

  const auto n = static_cast<Eigen::Index>(slots.size());
  if (n > 0) {
    auto inputs_of = [&](std::size_t g, const Vector& x) {
      std::vector<double> in(L, 0.0);
      for (Eigen::Index i : own[g]) in[slots[i].mover] = x[i];
      return in;
    };
    NlpProblem nlp;
    nlp.dimension = n;
    nlp.objective = [&](const Vector& x) {
      double f = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) f += prices[slots[i].mover] * x[i];
      for (std::size_t g = 0; g < G; ++g) {
        if (!own[g].empty()) f -= value[g] * production_output(*techs[g], inputs_of(g, x));
      }
      return f;
    };
    nlp.gradient = [&](const Vector& x) {
      Vector grad(n);
      for (Eigen::Index i = 0; i < n; ++i) grad[i] = prices[slots[i].mover];
      for (std::size_t g = 0; g < G; ++g) {
        if (own[g].empty()) continue;
        const ProductionTech& tech = *techs[g];
        std::vector<double> in = inputs_of(g, x);
        double out = production_output(tech, in);
        for (Eigen::Index i : own[g]) {
          std::size_t l = slots[i].mover;
          double m = tech.form == TechForm::kLinear ? tech.scale * tech.coefficients[l]
                                                    : (x[i] > 0.0 ? tech.coefficients[l] * out / x[i] : numerics::kInf);
          grad[i] -= value[g] * m;
        }
      }
      return grad;
    };
    nlp.hessian = [&](const Vector& x) {
      Matrix h = Matrix::Zero(n, n);
      for (std::size_t g = 0; g < G; ++g) {
        if (own[g].empty() || techs[g]->form == TechForm::kLinear) continue;
        Matrix local = production_hessian(*techs[g], inputs_of(g, x));
        for (Eigen::Index a : own[g]) {
          for (Eigen::Index b : own[g]) {
            h(a, b) -= value[g] * local(static_cast<Eigen::Index>(slots[a].mover),
                                        static_cast<Eigen::Index>(slots[b].mover));
          }
        }
      }
      return h;
    };
    nlp.lower = Vector::Zero(n);
    std::vector<std::size_t> capped;
    for (std::size_t l = 0; l < L; ++l) {
      if (by_mover[l].empty()) continue;
      Vector a = Vector::Zero(n);
      for (Eigen::Index i : by_mover[l]) a[i] = 1.0;
      nlp.constraints.push_back(numerics::linear_constraint(a, cap[l]));
      capped.push_back(l);
    }
    Vector start(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t l = slots[i].mover;
      start[i] = 0.5 * cap[l] / static_cast<double>(by_mover[l].size());
    }
    auto res = numerics::kkt_solve(nlp, start, KktOptions{1e-13, max_iterations, acceptable});
    plan.converged = res.status == Status::kOk;
    for (std::size_t c = 0; c < capped.size(); ++c) {
      plan.cap_multiplier[capped[c]] = res.multipliers[static_cast<Eigen::Index>(c)];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      plan.inputs(static_cast<Eigen::Index>(slots[i].mover), static_cast<Eigen::Index>(slots[i].good)) =
          std::max(0.0, res.x[i]);
    }
  }

  for (std::size_t g = 0; g < G; ++g) {
    if (techs[g] == nullptr) continue;
    const ProductionTech& tech = *techs[g];
    std::vector<double> in(L), shadow(L);
    for (std::size_t l = 0; l < L; ++l) {
      in[l] = plan.inputs(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(g));
      shadow[l] = prices[l] + plan.cap_multiplier[l];
    }
    double out = production_output(tech, in);
    plan.output[g] = out;
    bool produced = out > 1e-12 && !own[g].empty();
    if (produced && tech.form == TechForm::kCobbDouglas) {
      ProductionValue v = eval_production(tech, in);
      std::vector<double> shares = cost_min(tech, shadow, out).marginal_shares;
      double tau = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        if (shares[l] > 0.0) tau += shares[l] * shadow[l] * v.marginal_requirements[l];
      }
      plan.marginal[g] = tau;
    } else {
      plan.marginal[g] = cost_min(tech, shadow, produced ? out : 0.0).marginal_cost;
    }
    if (!produced) continue;
    for (std::size_t l = 0; l < L; ++l) {
      double a = tech.coefficients[l];
      if (a <= 0.0 || in[l] <= 1e-9 * std::max(1.0, cap[l])) continue;
      double m = tech.form == TechForm::kLinear ? tech.scale * a : a * out / in[l];
      double gap = std::abs(value[g] * m - shadow[l]) / std::max(1.0, shadow[l]);
      plan.stationarity = std::max(plan.stationarity, gap);
    }
  }
  return plan;
}

std::vector<double> column(const Matrix& m, int t) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = m(r, t);
  return v;
}

void check_schedules(const EconomyScenario& s, std::span<const double> lambda, const Matrix& phi,
                     const Matrix& capacity, const char* who) {
  const auto L = static_cast<Eigen::Index>(s.num_prime_movers());
  if (lambda.size() != static_cast<std::size_t>(s.horizon) || phi.rows() != L || phi.cols() != s.horizon ||
      capacity.rows() != L || capacity.cols() != s.horizon) {
    throw Error(ErrorCode::kInvalidArgument, std::string(who) + ": schedules do not match the scenario");
  }
  for (double v : lambda) {
    if (!(v > 0.0)) throw Error(ErrorCode::kDomainError, std::string(who) + ": lambda must be > 0");
  }
  if ((phi.array() < 0.0).any()) throw Error(ErrorCode::kDomainError, std::string(who) + ": phi must be >= 0");
}

}  // namespace

std::vector<double> surplus_schedule(const EconomyScenario& s, const Matrix& production,
                                     const std::vector<Matrix>& allocations) {
  const int T = s.horizon;
  const std::vector<double> eps = s.epsilon();
  std::vector<double> surplus(static_cast<std::size_t>(T), 0.0);
  for (int t = 0; t < T; ++t) {
    double income = 0.0;
    for (std::size_t e = 0; e < s.num_energy_goods(); ++e) {
      double stock = t == 0 ? s.energy_goods[e].initial_stock : production(static_cast<Eigen::Index>(e), t - 1);
      income += s.energy_goods[e].energy_content * stock;
    }
    double spent = 0.0;
    const Matrix& x = allocations[static_cast<std::size_t>(t)];
    for (Eigen::Index l = 0; l < x.rows(); ++l) spent += eps[static_cast<std::size_t>(l)] * x.row(l).sum();
    surplus[static_cast<std::size_t>(t)] = income - spent;
  }
  return surplus;
}

SurplusPlan solve_surplus_plan(const EconomyScenario& s, std::span<const double> lambda, const Matrix& phi,
                               const Matrix& capacity) {
  check_schedules(s, lambda, phi, capacity, "solve_surplus_plan");
  const int T = s.horizon;
  const std::size_t E = s.num_energy_goods();
  const std::size_t L = s.num_prime_movers();
  const auto Ei = static_cast<Eigen::Index>(E);
  const auto Li = static_cast<Eigen::Index>(L);
  const std::vector<double> eps = s.epsilon();
  const Matrix beta = discount_factors(lambda);

  std::vector<const ProductionTech*> techs;
  for (const auto& eg : s.energy_goods) {
    const ProductionTech* tech = s.technology_for(eg.id);
    if (tech == nullptr) throw Error(ErrorCode::kInvalidArgument, "solve_surplus_plan: no technology for " + eg.id);
    techs.push_back(tech);
  }

  SurplusPlan plan;
  plan.production = Matrix::Zero(Ei, T);
  plan.tau = Matrix::Zero(Ei, T);
  plan.tau_avg = Matrix::Constant(Ei, T, kNaN);
  plan.meroi = Matrix::Constant(Ei, T, kNaN);
  plan.aeroi = Matrix::Constant(Ei, T, kNaN);
  plan.capacity_multipliers = Matrix::Zero(Li, T);
  if (T == 1) plan.status = Status::kDegenerateHorizon;

  for (int t = 0; t < T; ++t) {
    std::vector<double> prices(L);
    for (std::size_t l = 0; l < L; ++l) prices[l] = eps[l] + phi(static_cast<Eigen::Index>(l), t);
    const double b = t + 1 < T ? beta(t, 1) : 0.0;
    std::vector<double> value(E);
    for (std::size_t e = 0; e < E; ++e) value[e] = b * s.energy_goods[e].energy_content;
    ValuePlan vp = maximize_value(techs, value, prices, column(capacity, t), s.solver.tolerance,
                                  s.solver.max_iterations);
    if (!vp.converged) plan.status = Status::kNoConvergence;
    plan.allocations.push_back(vp.inputs);
    plan.stationarity.push_back(vp.stationarity);
    for (std::size_t l = 0; l < L; ++l) plan.capacity_multipliers(static_cast<Eigen::Index>(l), t) = vp.cap_multiplier[l];
    for (std::size_t e = 0; e < E; ++e) {
      auto ei = static_cast<Eigen::Index>(e);
      plan.production(ei, t) = vp.output[e];
      plan.tau(ei, t) = vp.marginal[e];
      if (!(vp.output[e] > 1e-12)) continue;
      double spent = 0.0;
      for (std::size_t l = 0; l < L; ++l) spent += prices[l] * vp.inputs(static_cast<Eigen::Index>(l), ei);
      plan.tau_avg(ei, t) = spent / vp.output[e];
      EroiReport r = eroi_and_discount(s.energy_goods[e].energy_content, vp.marginal[e], plan.tau_avg(ei, t));
      plan.meroi(ei, t) = r.meroi;
      plan.aeroi(ei, t) = r.aeroi;
    }
  }
  plan.surplus = surplus_schedule(s, plan.production, plan.allocations);
  return plan;
}

std::vector<double> power_scarcity_cost(const EconomyScenario& s, double beta, const Matrix& marginal,
                                        const std::vector<bool>& produced) {
  const std::size_t L = s.num_prime_movers();
  const std::vector<double> eps = s.epsilon();
  std::vector<double> phi(L, 0.0);
  std::size_t count = 0;
  for (bool p : produced) count += p ? 1 : 0;
  if (count == 0) return phi;
  for (std::size_t l = 0; l < L; ++l) {
    double sum = 0.0;
    for (std::size_t e = 0; e < produced.size(); ++e) {
      if (!produced[e]) continue;
      sum += s.energy_goods[e].energy_content * marginal(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(e)) -
             eps[l];
    }
    phi[l] = std::max(0.0, beta * sum / static_cast<double>(count));
  }
  return phi;
}

EroiReport eroi_and_discount(double energy_content, double tau, double tau_avg) {
  if (tau == 0.0 || tau_avg == 0.0) {
    throw Error(ErrorCode::kDivisionByZero, "eroi_and_discount: marginal or average transfer is zero");
  }
  EroiReport r;
  r.meroi = energy_content / tau;
  r.aeroi = energy_content / tau_avg;
  r.implied_beta = 1.0 / r.meroi;
  return r;
}

std::vector<double> endowment_path(std::span<const double> production, double initial, double depreciation,
                                   int horizon) {
  std::vector<double> path(static_cast<std::size_t>(horizon), 0.0);
  // Q_0 is the initial endowment; Q_j for j >= 1 is production[j - 1].
  auto produced = [&](int j) {
    if (j == 0) return initial;
    auto idx = static_cast<std::size_t>(j - 1);
    return idx < production.size() ? production[idx] : 0.0;
  };
  for (int t = 1; t <= horizon; ++t) {
    double sum = 0.0;
    double survival = 1.0;
    for (int i = 0; i <= t - 1; ++i) {
      sum += survival * produced(t - 1 - i);
      survival *= depreciation;
    }
    path[static_cast<std::size_t>(t - 1)] = sum;
  }
  return path;
}

Matrix lifetime_values(const EconomyScenario& s, const Matrix& beta, const Matrix& phi) {
  const int T = s.horizon;
  const std::size_t L = s.num_prime_movers();
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(L), T);
  for (std::size_t l = 0; l < L; ++l) {
    const double d = s.prime_movers[l].depreciation;
    for (int t = 0; t < T; ++t) {
      double sum = 0.0;
      double survival = 1.0;
      for (int i = 1; t + i < T; ++i) {
        sum += beta(t, i) * phi(static_cast<Eigen::Index>(l), t + i) * survival;
        survival *= d;
      }
      v(static_cast<Eigen::Index>(l), t) = sum;
    }
  }
  return v;
}

CapitalPlan solve_capital_plan(const EconomyScenario& s, std::span<const double> lambda, const Matrix& phi,
                               const Matrix& capacity) {
  check_schedules(s, lambda, phi, capacity, "solve_capital_plan");
  const int T = s.horizon;
  const std::size_t L = s.num_prime_movers();
  const auto Li = static_cast<Eigen::Index>(L);
  const std::vector<double> eps = s.epsilon();
  const Matrix beta = discount_factors(lambda);

  // Prime movers without a technology are never produced.
  std::vector<const ProductionTech*> techs;
  for (const auto& pm : s.prime_movers) techs.push_back(s.technology_for(pm.id));

  CapitalPlan plan;
  plan.production = Matrix::Zero(Li, T);
  plan.tau = Matrix::Zero(Li, T);
  plan.capacity_multipliers = Matrix::Zero(Li, T);
  plan.lifetime_value = lifetime_values(s, beta, phi);
  for (int t = 0; t < T; ++t) {
    std::vector<double> prices(L), value(L);
    for (std::size_t l = 0; l < L; ++l) {
      prices[l] = eps[l] + phi(static_cast<Eigen::Index>(l), t);
      value[l] = plan.lifetime_value(static_cast<Eigen::Index>(l), t);
    }
    ValuePlan vp = maximize_value(techs, value, prices, column(capacity, t), s.solver.tolerance,
                                  s.solver.max_iterations);
    if (!vp.converged) plan.status = Status::kNoConvergence;
    plan.allocations.push_back(vp.inputs);
    plan.stationarity.push_back(vp.stationarity);
    for (std::size_t l = 0; l < L; ++l) {
      auto li = static_cast<Eigen::Index>(l);
      plan.production(li, t) = vp.output[l];
      plan.tau(li, t) = vp.marginal[l];
      plan.capacity_multipliers(li, t) = vp.cap_multiplier[l];
    }
  }
  plan.endowment = Matrix::Zero(Li, T);
  for (std::size_t l = 0; l < L; ++l) {
    auto li = static_cast<Eigen::Index>(l);
    std::vector<double> q(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) q[static_cast<std::size_t>(t)] = plan.production(li, t);
    std::vector<double> path = endowment_path(q, s.prime_movers[l].initial_endowment, s.prime_movers[l].depreciation, T);
    for (int t = 0; t < T; ++t) plan.endowment(li, t) = path[static_cast<std::size_t>(t)];
  }
  plan.power = aggregate_power(s, plan.endowment);
  return plan;
}

std::vector<double> aggregate_power(const EconomyScenario& s, const Matrix& endowment) {
  std::vector<double> power(static_cast<std::size_t>(endowment.cols()), 0.0);
  for (Eigen::Index t = 0; t < endowment.cols(); ++t) {
    for (std::size_t l = 0; l < s.num_prime_movers(); ++l) {
      power[static_cast<std::size_t>(t)] += s.prime_movers[l].power_rate * endowment(static_cast<Eigen::Index>(l), t);
    }
  }
  return power;
}

}  // namespace energyecon
