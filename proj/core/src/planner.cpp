#include "energyecon/planner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace energyecon {

using numerics::Constraint;
using numerics::KktOptions;
using numerics::NlpProblem;

namespace {

enum class Role { kFinal, kEnergy, kPrimeMover };

// Which prime movers can exist and which goods can be produced in each
// period, propagated forward from the initial endowments and stocks.
struct Reachability {
  std::vector<std::vector<bool>> mover;    // [t][l]
  std::vector<std::vector<bool>> good;     // [t][k]
  std::vector<bool> energy;                // [t], some energy income exists
};

Role role_of(const EconomyScenario& s, std::size_t k) {
  if (k < s.num_final_goods()) return Role::kFinal;
  if (k < s.num_final_goods() + s.num_energy_goods()) return Role::kEnergy;
  return Role::kPrimeMover;
}

// excluded[t][k] removes an otherwise reachable good from the problem.
using Exclusions = std::vector<std::vector<bool>>;

Reachability reachability(const EconomyScenario& s, const std::vector<const ProductionTech*>& techs,
                          const Exclusions* excluded = nullptr) {
  const int T = s.horizon;
  const std::size_t K = s.num_goods();
  const std::size_t L = s.num_prime_movers();
  Reachability r;
  r.mover.assign(static_cast<std::size_t>(T), std::vector<bool>(L, false));
  r.good.assign(static_cast<std::size_t>(T), std::vector<bool>(K, false));
  r.energy.assign(static_cast<std::size_t>(T), false);
  for (int t = 0; t < T; ++t) {
    auto ts = static_cast<std::size_t>(t);
    if (t == 0) {
      for (const auto& e : s.energy_goods) r.energy[0] = r.energy[0] || e.initial_stock > 0.0;
      for (std::size_t l = 0; l < L; ++l) r.mover[0][l] = s.prime_movers[l].initial_endowment > 0.0;
    } else {
      for (std::size_t e = 0; e < s.num_energy_goods(); ++e) {
        r.energy[ts] = r.energy[ts] || r.good[ts - 1][s.energy_index(e)];
      }
      for (std::size_t l = 0; l < L; ++l) {
        r.mover[ts][l] = r.mover[ts - 1][l] || r.good[ts - 1][s.prime_mover_good_index(l)];
      }
    }
    if (!r.energy[ts]) continue;
    for (std::size_t k = 0; k < K; ++k) {
      const ProductionTech* tech = techs[k];
      if (tech == nullptr) continue;
      Role role = role_of(s, k);
      if (role != Role::kFinal && t == T - 1) continue;
      if (role == Role::kFinal && !(s.final_goods[k].weights[ts] > 0.0)) continue;
      bool any = false, all = true;
      for (std::size_t l = 0; l < L; ++l) {
        if (tech->coefficients[l] <= 0.0) continue;
        any = any || r.mover[ts][l];
        all = all && r.mover[ts][l];
      }
      r.good[ts][k] = (tech->form == TechForm::kLinear ? any : (any && all)) && !(excluded && (*excluded)[ts][k]);
    }
  }
  return r;
}

struct Slot {
  int period;
  std::size_t good;
  std::size_t mover;
};

class Builder {
 public:
  explicit Builder(const EconomyScenario& s, const Exclusions* excluded = nullptr) : s_(s) {
    T_ = s.horizon;
    K_ = s.num_goods();
    L_ = s.num_prime_movers();
    for (const auto& id : s.good_ids()) techs_.push_back(s.technology_for(id));
    eps_ = s.epsilon();
    reach_ = reachability(s, techs_, excluded);
    index_.assign(static_cast<std::size_t>(T_), std::vector<std::vector<Eigen::Index>>(K_, std::vector<Eigen::Index>(L_, -1)));
    for (int t = 0; t < T_; ++t) {
      auto ts = static_cast<std::size_t>(t);
      for (std::size_t k = 0; k < K_; ++k) {
        if (!reach_.good[ts][k]) continue;
        for (std::size_t l = 0; l < L_; ++l) {
          if (techs_[k]->coefficients[l] <= 0.0 || !reach_.mover[ts][l]) continue;
          index_[ts][k][l] = static_cast<Eigen::Index>(slots_.size());
          slots_.push_back({t, k, l});
        }
      }
    }
    n_ = static_cast<Eigen::Index>(slots_.size());
  }

  const Reachability& reach() const { return reach_; }
  Eigen::Index dimension() const { return n_; }

  // Output of good k in period t, with gradient/Hessian over the full
  // variable vector when requested.
  double output(int t, std::size_t k, const Vector& x) const {
    if (!reach_.good[static_cast<std::size_t>(t)][k]) return 0.0;
    return production_output(*techs_[k], inputs(t, k, x));
  }

  std::vector<double> inputs(int t, std::size_t k, const Vector& x) const {
    std::vector<double> in(L_, 0.0);
    for (std::size_t l = 0; l < L_; ++l) {
      Eigen::Index i = index_[static_cast<std::size_t>(t)][k][l];
      if (i >= 0) in[l] = x[i];
    }
    return in;
  }

  void add_output_gradient(int t, std::size_t k, const Vector& x, double weight, Vector& grad) const {
    if (!reach_.good[static_cast<std::size_t>(t)][k]) return;
    const ProductionTech& tech = *techs_[k];
    std::vector<double> in = inputs(t, k, x);
    double out = production_output(tech, in);
    for (std::size_t l = 0; l < L_; ++l) {
      Eigen::Index i = index_[static_cast<std::size_t>(t)][k][l];
      if (i < 0) continue;
      double a = tech.coefficients[l];
      double m = tech.form == TechForm::kLinear ? tech.scale * a : (in[l] > 0.0 ? a * out / in[l] : numerics::kInf);
      grad[i] += weight * m;
    }
  }

  void add_output_hessian(int t, std::size_t k, const Vector& x, double weight, Matrix& h) const {
    if (!reach_.good[static_cast<std::size_t>(t)][k] || techs_[k]->form == TechForm::kLinear) return;
    std::vector<double> in = inputs(t, k, x);
    Matrix local = production_hessian(*techs_[k], in);
    for (std::size_t a = 0; a < L_; ++a) {
      Eigen::Index i = index_[static_cast<std::size_t>(t)][k][a];
      if (i < 0) continue;
      for (std::size_t b = 0; b < L_; ++b) {
        Eigen::Index j = index_[static_cast<std::size_t>(t)][k][b];
        if (j >= 0) h(i, j) += weight * local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
  }

  NlpProblem problem(std::vector<std::pair<int, std::size_t>>& capacity_rows, std::vector<int>& energy_rows) const {
    NlpProblem p;
    p.dimension = n_;
    p.lower = Vector::Zero(n_);
    const std::size_t F = s_.num_final_goods();

    // Utility: sum w_{f,t} ln f(x_{f,t}).
    p.objective = [this, F](const Vector& x) {
      double u = 0.0;
      for (int t = 0; t < T_; ++t) {
        for (std::size_t f = 0; f < F; ++f) {
          double w = s_.final_goods[f].weights[static_cast<std::size_t>(t)];
          if (!(w > 0.0)) continue;
          u += w * log_output(t, f, x);
        }
      }
      return -u;
    };
    p.gradient = [this, F](const Vector& x) {
      Vector g = Vector::Zero(n_);
      for (int t = 0; t < T_; ++t) {
        for (std::size_t f = 0; f < F; ++f) {
          double w = s_.final_goods[f].weights[static_cast<std::size_t>(t)];
          if (!(w > 0.0)) continue;
          const ProductionTech& tech = *techs_[f];
          std::vector<double> in = inputs(t, f, x);
          if (tech.form == TechForm::kCobbDouglas) {
            for (std::size_t l = 0; l < L_; ++l) {
              Eigen::Index i = index_[static_cast<std::size_t>(t)][f][l];
              if (i >= 0) g[i] -= w * tech.coefficients[l] / in[l];
            }
          } else {
            double lin = 0.0;
            for (std::size_t l = 0; l < L_; ++l) lin += tech.coefficients[l] * in[l];
            for (std::size_t l = 0; l < L_; ++l) {
              Eigen::Index i = index_[static_cast<std::size_t>(t)][f][l];
              if (i >= 0) g[i] -= w * tech.coefficients[l] / lin;
            }
          }
        }
      }
      return g;
    };
    p.hessian = [this, F](const Vector& x) {
      Matrix h = Matrix::Zero(n_, n_);
      for (int t = 0; t < T_; ++t) {
        for (std::size_t f = 0; f < F; ++f) {
          double w = s_.final_goods[f].weights[static_cast<std::size_t>(t)];
          if (!(w > 0.0)) continue;
          const ProductionTech& tech = *techs_[f];
          std::vector<double> in = inputs(t, f, x);
          const auto& idx = index_[static_cast<std::size_t>(t)][f];
          if (tech.form == TechForm::kCobbDouglas) {
            for (std::size_t l = 0; l < L_; ++l) {
              if (idx[l] >= 0) h(idx[l], idx[l]) += w * tech.coefficients[l] / (in[l] * in[l]);
            }
          } else {
            double lin = 0.0;
            for (std::size_t l = 0; l < L_; ++l) lin += tech.coefficients[l] * in[l];
            for (std::size_t a = 0; a < L_; ++a) {
              for (std::size_t b = 0; b < L_; ++b) {
                if (idx[a] >= 0 && idx[b] >= 0) {
                  h(idx[a], idx[b]) += w * tech.coefficients[a] * tech.coefficients[b] / (lin * lin);
                }
              }
            }
          }
        }
      }
      return h;
    };

    // Capacity: sum_k x_{l,k,t} - sum_{j<t} d^{t-1-j} Q_{l,j} <= d^t Q_{l,0}.
    for (int t = 0; t < T_; ++t) {
      for (std::size_t l = 0; l < L_; ++l) {
        bool used = false;
        for (std::size_t k = 0; k < K_; ++k) used = used || index_[static_cast<std::size_t>(t)][k][l] >= 0;
        if (!used) continue;
        const double d = s_.prime_movers[l].depreciation;
        const double base = std::pow(d, t) * s_.prime_movers[l].initial_endowment;
        const std::size_t pm = s_.prime_mover_good_index(l);
        Constraint c;
        c.kind = Constraint::Kind::kLessEqual;
        c.value = [this, t, l, d, base, pm](const Vector& x) {
          double v = -base;
          for (std::size_t k = 0; k < K_; ++k) {
            Eigen::Index i = index_[static_cast<std::size_t>(t)][k][l];
            if (i >= 0) v += x[i];
          }
          for (int j = 0; j < t; ++j) v -= std::pow(d, t - 1 - j) * output(j, pm, x);
          return v;
        };
        c.gradient = [this, t, l, d, pm](const Vector& x) {
          Vector g = Vector::Zero(n_);
          for (std::size_t k = 0; k < K_; ++k) {
            Eigen::Index i = index_[static_cast<std::size_t>(t)][k][l];
            if (i >= 0) g[i] += 1.0;
          }
          for (int j = 0; j < t; ++j) add_output_gradient(j, pm, x, -std::pow(d, t - 1 - j), g);
          return g;
        };
        c.hessian = [this, t, d, pm](const Vector& x) {
          Matrix h = Matrix::Zero(n_, n_);
          for (int j = 0; j < t; ++j) add_output_hessian(j, pm, x, -std::pow(d, t - 1 - j), h);
          return h;
        };
        p.constraints.push_back(std::move(c));
        capacity_rows.emplace_back(t, l);
      }
    }

    // Energy: eps' x_{.,t} - sum_e delta_e Q_{e,t-1} <= initial income (t = 0).
    for (int t = 0; t < T_; ++t) {
      bool used = false;
      for (std::size_t k = 0; k < K_; ++k) {
        for (std::size_t l = 0; l < L_; ++l) used = used || index_[static_cast<std::size_t>(t)][k][l] >= 0;
      }
      if (!used) continue;
      double income = 0.0;
      if (t == 0) {
        for (const auto& e : s_.energy_goods) income += e.energy_content * e.initial_stock;
      }
      Constraint c;
      c.kind = Constraint::Kind::kLessEqual;
      c.value = [this, t, income](const Vector& x) {
        double v = -income;
        for (std::size_t k = 0; k < K_; ++k) {
          for (std::size_t l = 0; l < L_; ++l) {
            Eigen::Index i = index_[static_cast<std::size_t>(t)][k][l];
            if (i >= 0) v += eps_[l] * x[i];
          }
        }
        if (t > 0) {
          for (std::size_t e = 0; e < s_.num_energy_goods(); ++e) {
            v -= s_.energy_goods[e].energy_content * output(t - 1, s_.energy_index(e), x);
          }
        }
        return v;
      };
      c.gradient = [this, t](const Vector& x) {
        Vector g = Vector::Zero(n_);
        for (std::size_t k = 0; k < K_; ++k) {
          for (std::size_t l = 0; l < L_; ++l) {
            Eigen::Index i = index_[static_cast<std::size_t>(t)][k][l];
            if (i >= 0) g[i] += eps_[l];
          }
        }
        if (t > 0) {
          for (std::size_t e = 0; e < s_.num_energy_goods(); ++e) {
            add_output_gradient(t - 1, s_.energy_index(e), x, -s_.energy_goods[e].energy_content, g);
          }
        }
        return g;
      };
      if (t > 0) {
        c.hessian = [this, t](const Vector& x) {
          Matrix h = Matrix::Zero(n_, n_);
          for (std::size_t e = 0; e < s_.num_energy_goods(); ++e) {
            add_output_hessian(t - 1, s_.energy_index(e), x, -s_.energy_goods[e].energy_content, h);
          }
          return h;
        };
      }
      p.constraints.push_back(std::move(c));
      energy_rows.push_back(t);
    }
    return p;
  }

  // Spreads a fraction of each period's expected capacity and energy over
  // the variables that draw on it.
  Vector start(double fraction) const {
    Vector x = Vector::Zero(n_);
    double typical = 0.0;
    int count = 0;
    for (const auto& pm : s_.prime_movers) {
      if (pm.initial_endowment > 0.0) {
        typical += pm.initial_endowment;
        ++count;
      }
    }
    typical = count > 0 ? typical / count : 1.0;
    double income = 0.0;
    for (const auto& e : s_.energy_goods) income += e.energy_content * e.initial_stock;
    for (int t = 0; t < T_; ++t) {
      auto ts = static_cast<std::size_t>(t);
      std::vector<int> users(L_, 0);
      int total = 0;
      for (std::size_t k = 0; k < K_; ++k) {
        for (std::size_t l = 0; l < L_; ++l) {
          if (index_[ts][k][l] >= 0) {
            ++users[l];
            ++total;
          }
        }
      }
      if (total == 0) continue;
      // Energy affordable per variable at the period's budget estimate.
      double energy_each = income > 0.0 ? income / static_cast<double>(total) : numerics::kInf;
      for (std::size_t k = 0; k < K_; ++k) {
        for (std::size_t l = 0; l < L_; ++l) {
          Eigen::Index i = index_[ts][k][l];
          if (i < 0) continue;
          const auto& pm = s_.prime_movers[l];
          double cap = std::pow(pm.depreciation, t) * pm.initial_endowment;
          if (!(cap > 0.0)) cap = 0.1 * typical;
          double v = fraction * cap / users[l];
          v = std::min(v, fraction * energy_each / eps_[l]);
          x[i] = std::max(v, 1e-6);
        }
      }
    }
    return x;
  }

  PlannerSolution unpack(const numerics::KktResult& r, const std::vector<std::pair<int, std::size_t>>& capacity_rows,
                         const std::vector<int>& energy_rows) const {
    PlannerSolution sol;
    const auto Ki = static_cast<Eigen::Index>(K_);
    const auto Li = static_cast<Eigen::Index>(L_);
    Vector x = r.x.cwiseMax(0.0);
    sol.quantities = Matrix::Zero(Ki, T_);
    sol.endowment = Matrix::Zero(Li, T_);
    sol.phi = Matrix::Zero(Li, T_);
    sol.available = Matrix::Zero(Li, T_);
    sol.lambda.assign(static_cast<std::size_t>(T_), 0.0);
    for (int t = 0; t < T_; ++t) {
      Matrix alloc = Matrix::Zero(Li, Ki);
      for (std::size_t k = 0; k < K_; ++k) {
        for (std::size_t l = 0; l < L_; ++l) {
          Eigen::Index i = index_[static_cast<std::size_t>(t)][k][l];
          if (i >= 0) alloc(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = x[i];
        }
        sol.quantities(static_cast<Eigen::Index>(k), t) = output(t, k, x);
      }
      sol.allocations.push_back(std::move(alloc));
      for (std::size_t l = 0; l < L_; ++l) {
        sol.available(static_cast<Eigen::Index>(l), t) = reach_.mover[static_cast<std::size_t>(t)][l] ? 1.0 : 0.0;
      }
    }
    for (std::size_t l = 0; l < L_; ++l) {
      const double d = s_.prime_movers[l].depreciation;
      for (int t = 0; t < T_; ++t) {
        double v = std::pow(d, t) * s_.prime_movers[l].initial_endowment;
        for (int j = 0; j < t; ++j) {
          v += std::pow(d, t - 1 - j) * sol.quantities(static_cast<Eigen::Index>(s_.prime_mover_good_index(l)), j);
        }
        sol.endowment(static_cast<Eigen::Index>(l), t) = v;
      }
    }
    const std::size_t C = capacity_rows.size();
    for (std::size_t e = 0; e < energy_rows.size(); ++e) {
      sol.lambda[static_cast<std::size_t>(energy_rows[e])] = r.multipliers[static_cast<Eigen::Index>(C + e)];
    }
    for (std::size_t c = 0; c < C; ++c) {
      auto [t, l] = capacity_rows[c];
      double lam = sol.lambda[static_cast<std::size_t>(t)];
      double m = r.multipliers[static_cast<Eigen::Index>(c)];
      sol.phi(static_cast<Eigen::Index>(l), t) = lam > 0.0 ? m / lam : 0.0;
    }
    sol.surplus.assign(static_cast<std::size_t>(T_), 0.0);
    sol.budget_slack.assign(static_cast<std::size_t>(T_), 0.0);
    for (int t = 0; t < T_; ++t) {
      double income = 0.0;
      for (std::size_t e = 0; e < s_.num_energy_goods(); ++e) {
        income += s_.energy_goods[e].energy_content *
                  (t == 0 ? s_.energy_goods[e].initial_stock
                          : sol.quantities(static_cast<Eigen::Index>(s_.energy_index(e)), t - 1));
      }
      double energy_spent = 0.0, other_spent = 0.0;
      const Matrix& alloc = sol.allocations[static_cast<std::size_t>(t)];
      for (std::size_t k = 0; k < K_; ++k) {
        double spent = 0.0;
        for (std::size_t l = 0; l < L_; ++l) spent += eps_[l] * alloc(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
        (role_of(s_, k) == Role::kEnergy ? energy_spent : other_spent) += spent;
      }
      sol.surplus[static_cast<std::size_t>(t)] = income - energy_spent;
      sol.budget_slack[static_cast<std::size_t>(t)] = income - energy_spent - other_spent;
    }
    sol.utility = -r.objective;
    sol.residuals = r.residuals;
    sol.iterations = r.iterations;
    sol.status = r.status;
    return sol;
  }

 private:
  double log_output(int t, std::size_t f, const Vector& x) const {
    const ProductionTech& tech = *techs_[f];
    std::vector<double> in = inputs(t, f, x);
    if (tech.form == TechForm::kCobbDouglas) {
      double v = std::log(tech.scale);
      for (std::size_t l = 0; l < L_; ++l) {
        if (tech.coefficients[l] > 0.0) v += tech.coefficients[l] * std::log(in[l]);
      }
      return v;
    }
    double lin = 0.0;
    for (std::size_t l = 0; l < L_; ++l) lin += tech.coefficients[l] * in[l];
    return std::log(tech.scale * lin);
  }

  const EconomyScenario& s_;
  int T_ = 0;
  std::size_t K_ = 0, L_ = 0;
  std::vector<const ProductionTech*> techs_;
  std::vector<double> eps_;
  Reachability reach_;
  std::vector<std::vector<std::vector<Eigen::Index>>> index_;  // [t][k][l]
  std::vector<Slot> slots_;
  Eigen::Index n_ = 0;
};

}  // namespace

void check_planner_feasibility(const EconomyScenario& s) {
  std::vector<const ProductionTech*> techs;
  for (const auto& id : s.good_ids()) techs.push_back(s.technology_for(id));
  Reachability r = reachability(s, techs);
  for (int t = 0; t < s.horizon; ++t) {
    auto ts = static_cast<std::size_t>(t);
    for (std::size_t f = 0; f < s.num_final_goods(); ++f) {
      if (!(s.final_goods[f].weights[ts] > 0.0) || r.good[ts][f]) continue;
      std::ostringstream msg;
      msg << "final good " << s.final_goods[f].id << " cannot be produced in period " << t + 1;
      msg << (r.energy[ts] ? ": none of its prime movers is available" : ": no energy surplus is available");
      throw Error(ErrorCode::kInfeasible, msg.str());
    }
  }
}

PlannerSolution solve_planner(const EconomyScenario& s, const PlannerOptions& options) {
  check_planner_feasibility(s);
  auto attempt = [&](const Exclusions* excluded) {
    Builder b(s, excluded);
    if (b.dimension() == 0) throw Error(ErrorCode::kInfeasible, "nothing can be produced in any period");
    std::vector<std::pair<int, std::size_t>> capacity_rows;
    std::vector<int> energy_rows;
    NlpProblem p = b.problem(capacity_rows, energy_rows);
    auto r = numerics::kkt_solve(p, b.start(options.start_fraction),
                                 KktOptions{options.tolerance, options.max_iterations, options.acceptable});
    return b.unpack(r, capacity_rows, energy_rows);
  };
  PlannerSolution sol = attempt(nullptr);
  if (sol.status == Status::kOk) return sol;

  // Cobb-Douglas intermediates whose interior optimum is many orders below
  // everything else are approached only linearly by the barrier iteration.
  // Fix them at zero and solve the remaining smooth problem.
  const auto K = static_cast<Eigen::Index>(s.num_goods());
  Exclusions excluded(static_cast<std::size_t>(s.horizon), std::vector<bool>(s.num_goods(), false));
  bool any = false;
  for (int t = 0; t < s.horizon; ++t) {
    const double top = sol.quantities.col(t).maxCoeff();
    for (Eigen::Index k = static_cast<Eigen::Index>(s.num_final_goods()); k < K; ++k) {
      const double q = sol.quantities(k, t);
      if (q > 0.0 && q <= options.negligible_output * top) {
        excluded[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] = true;
        any = true;
      }
    }
  }
  if (!any) return sol;
  PlannerSolution reduced = attempt(&excluded);
  if (reduced.status != Status::kOk && reduced.residuals.max() >= sol.residuals.max()) return sol;
  reduced.iterations += sol.iterations;
  return reduced;
}

}  // namespace energyecon
