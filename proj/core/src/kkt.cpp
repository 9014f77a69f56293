#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "energyecon/numerics.hpp"

namespace energyecon::numerics {

namespace {

constexpr double kFractionToBoundary = 0.995;
constexpr double kCentering = 0.1;
constexpr double kArmijo = 1e-2;

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// Index bookkeeping shared by the solver and the residual helper.
struct Layout {
  std::vector<Eigen::Index> equalities;
  std::vector<Eigen::Index> inequalities;
  std::vector<Eigen::Index> bounded;

  explicit Layout(const NlpProblem& p) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(p.constraints.size()); ++i) {
      if (p.constraints[i].kind == Constraint::Kind::kEquality) {
        equalities.push_back(i);
      } else {
        inequalities.push_back(i);
      }
    }
    if (p.lower.size() == p.dimension) {
      for (Eigen::Index k = 0; k < p.dimension; ++k) {
        if (std::isfinite(p.lower[k])) bounded.push_back(k);
      }
    }
  }
};

struct Iterate {
  Vector x, s, y, z, zb;
};

struct Evaluation {
  double f = 0.0;
  Vector grad;
  Vector h;       // equality values
  Vector g;       // inequality values
  Matrix jac_h;   // rows = equalities
  Matrix jac_g;   // rows = inequalities
  bool finite = false;
};

class Solver {
 public:
  Solver(const NlpProblem& problem, const KktOptions& options)
      : p_(problem), opt_(options), layout_(problem) {
    n_ = p_.dimension;
    me_ = static_cast<Eigen::Index>(layout_.equalities.size());
    mi_ = static_cast<Eigen::Index>(layout_.inequalities.size());
    nb_ = static_cast<Eigen::Index>(layout_.bounded.size());
  }

  KktResult run(const Vector& start) {
    Iterate it = initial(start);
    Evaluation ev = evaluate(it.x);
    if (!ev.finite) {
      throw Error(ErrorCode::kNonFiniteEvaluation,
                  "kkt_solve: objective or constraints not finite at start point");
    }

    KktResult best;
    double best_norm = kInf;
    auto record = [&](const Iterate& cur, const Evaluation& e, int iter) {
      KktResiduals r = residuals_at(cur, e);
      double norm = r.max();
      if (norm < best_norm) {
        best_norm = norm;
        best.x = cur.x;
        best.multipliers = pack_multipliers(cur);
        best.bound_multipliers = pack_bounds(cur);
        best.objective = e.f;
        best.residuals = r;
        best.iterations = iter;
      }
      return r;
    };

    for (int iter = 0; iter <= opt_.max_iterations; ++iter) {
      KktResiduals r = record(it, ev, iter);
      if (r.max() <= opt_.tolerance) {
        best.status = Status::kOk;
        best.iterations = iter;
        polish(best);
        return best;
      }
      if (iter == opt_.max_iterations) break;

      double mu = kCentering * average_complementarity(it);
      Vector dx, ds, dy, dz, dzb;
      if (!newton_direction(it, ev, mu, dx, ds, dy, dz, dzb)) break;

      double alpha = max_step(it, ds, dz, dzb, dx);
      double r0 = residual_norm(it, ev, mu);
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        Iterate trial{it.x + alpha * dx, it.s + alpha * ds, it.y + alpha * dy,
                      it.z + alpha * dz, it.zb + alpha * dzb};
        Evaluation tev = evaluate(trial.x);
        if (tev.finite) {
          double r1 = residual_norm(trial, tev, mu);
          if (r1 <= (1.0 - kArmijo * alpha) * r0) {
            it = std::move(trial);
            ev = std::move(tev);
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // Stalled; take the best iterate seen so far.
        break;
      }
    }
    best.status = best_norm <= std::max(opt_.tolerance, opt_.acceptable) ? Status::kOk : Status::kNoConvergence;
    if (best.status == Status::kOk) polish(best);
    return best;
  }

  KktResiduals residuals_for(const Vector& x, const Vector& multipliers,
                             const Vector& bound_multipliers) {
    Iterate it;
    it.x = x;
    it.y.resize(me_);
    it.z.resize(mi_);
    it.zb.resize(nb_);
    for (Eigen::Index j = 0; j < me_; ++j) it.y[j] = multipliers[layout_.equalities[j]];
    for (Eigen::Index i = 0; i < mi_; ++i) it.z[i] = multipliers[layout_.inequalities[i]];
    for (Eigen::Index k = 0; k < nb_; ++k) it.zb[k] = bound_multipliers[layout_.bounded[k]];
    Evaluation ev = evaluate(x);
    it.s = (-ev.g).cwiseMax(0.0);
    return residuals_at(it, ev);
  }

 private:
  Iterate initial(const Vector& start) {
    Iterate it;
    it.x = start;
    for (Eigen::Index k = 0; k < nb_; ++k) {
      Eigen::Index j = layout_.bounded[k];
      double lo = p_.lower[j];
      double margin = std::max(1e-2, 1e-2 * std::abs(lo));
      if (!(it.x[j] > lo + 1e-8)) it.x[j] = lo + margin;
    }
    Evaluation ev = evaluate(it.x);
    it.s.resize(mi_);
    for (Eigen::Index i = 0; i < mi_; ++i) {
      double gi = ev.finite ? ev.g[i] : 0.0;
      it.s[i] = std::max(-gi, 1.0);
    }
    it.y = Vector::Zero(me_);
    it.z = Vector::Ones(mi_);
    it.zb = Vector::Ones(nb_);
    return it;
  }

  Evaluation evaluate(const Vector& x) const {
    Evaluation ev;
    ev.f = p_.objective(x);
    ev.grad = p_.gradient(x);
    ev.h.resize(me_);
    ev.g.resize(mi_);
    ev.jac_h.resize(me_, n_);
    ev.jac_g.resize(mi_, n_);
    for (Eigen::Index j = 0; j < me_; ++j) {
      const Constraint& c = p_.constraints[layout_.equalities[j]];
      ev.h[j] = c.value(x);
      ev.jac_h.row(j) = c.gradient(x).transpose();
    }
    for (Eigen::Index i = 0; i < mi_; ++i) {
      const Constraint& c = p_.constraints[layout_.inequalities[i]];
      ev.g[i] = c.value(x);
      ev.jac_g.row(i) = c.gradient(x).transpose();
    }
    ev.finite = std::isfinite(ev.f) && ev.grad.allFinite() && ev.h.allFinite() &&
                ev.g.allFinite() && ev.jac_h.allFinite() && ev.jac_g.allFinite();
    return ev;
  }

  Vector dual_residual(const Iterate& it, const Evaluation& ev) const {
    Vector rd = ev.grad;
    if (me_ > 0) rd += ev.jac_h.transpose() * it.y;
    if (mi_ > 0) rd += ev.jac_g.transpose() * it.z;
    for (Eigen::Index k = 0; k < nb_; ++k) rd[layout_.bounded[k]] -= it.zb[k];
    return rd;
  }

  Vector bound_gap(const Iterate& it) const {
    Vector gap(nb_);
    for (Eigen::Index k = 0; k < nb_; ++k) {
      Eigen::Index j = layout_.bounded[k];
      gap[k] = it.x[j] - p_.lower[j];
    }
    return gap;
  }

  double average_complementarity(const Iterate& it) const {
    Eigen::Index m = mi_ + nb_;
    if (m == 0) return 0.0;
    double sum = it.s.dot(it.z) + bound_gap(it).dot(it.zb);
    return sum / static_cast<double>(m);
  }

  double residual_norm(const Iterate& it, const Evaluation& ev, double mu) const {
    double sq = dual_residual(it, ev).squaredNorm();
    sq += ev.h.squaredNorm();
    sq += (ev.g + it.s).squaredNorm();
    sq += (it.s.cwiseProduct(it.z).array() - mu).matrix().squaredNorm();
    sq += (bound_gap(it).cwiseProduct(it.zb).array() - mu).matrix().squaredNorm();
    return std::sqrt(sq);
  }

  KktResiduals residuals_at(const Iterate& it, const Evaluation& ev) const {
    KktResiduals r;
    r.stationarity = inf_norm(dual_residual(it, ev));
    double primal = inf_norm(ev.h);
    for (Eigen::Index i = 0; i < mi_; ++i) primal = std::max(primal, ev.g[i]);
    Vector gap = bound_gap(it);
    for (Eigen::Index k = 0; k < nb_; ++k) primal = std::max(primal, -gap[k]);
    r.primal = std::max(primal, 0.0);
    double dual = 0.0;
    for (Eigen::Index i = 0; i < mi_; ++i) dual = std::max(dual, -it.z[i]);
    for (Eigen::Index k = 0; k < nb_; ++k) dual = std::max(dual, -it.zb[k]);
    r.dual = dual;
    double comp = 0.0;
    for (Eigen::Index i = 0; i < mi_; ++i) comp = std::max(comp, std::abs(ev.g[i] * it.z[i]));
    for (Eigen::Index k = 0; k < nb_; ++k) comp = std::max(comp, std::abs(gap[k] * it.zb[k]));
    r.complementarity = comp;
    return r;
  }

  Matrix lagrangian_hessian(const Iterate& it) const {
    Matrix w = p_.hessian ? p_.hessian(it.x) : Matrix::Zero(n_, n_);
    for (Eigen::Index j = 0; j < me_; ++j) {
      const Constraint& c = p_.constraints[layout_.equalities[j]];
      if (c.hessian) w += it.y[j] * c.hessian(it.x);
    }
    for (Eigen::Index i = 0; i < mi_; ++i) {
      const Constraint& c = p_.constraints[layout_.inequalities[i]];
      if (c.hessian) w += it.z[i] * c.hessian(it.x);
    }
    return w;
  }

  bool newton_direction(const Iterate& it, const Evaluation& ev, double mu, Vector& dx,
                        Vector& ds, Vector& dy, Vector& dz, Vector& dzb) const {
    Vector rd = dual_residual(it, ev);
    Vector r_in = ev.g + it.s;
    Vector rc = (it.s.cwiseProduct(it.z).array() - mu).matrix();
    Vector gap = bound_gap(it);
    Vector rb = (gap.cwiseProduct(it.zb).array() - mu).matrix();

    Matrix h = lagrangian_hessian(it);
    Vector rhs = -rd;
    if (mi_ > 0) {
      Vector sigma = it.z.cwiseQuotient(it.s);
      h += ev.jac_g.transpose() * sigma.asDiagonal() * ev.jac_g;
      Vector t = (-rc + it.z.cwiseProduct(r_in)).cwiseQuotient(it.s);
      rhs -= ev.jac_g.transpose() * t;
    }
    for (Eigen::Index k = 0; k < nb_; ++k) {
      Eigen::Index j = layout_.bounded[k];
      h(j, j) += it.zb[k] / gap[k];
      rhs[j] -= rb[k] / gap[k];
    }

    Eigen::Index dim = n_ + me_;
    double delta = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Matrix kkt = Matrix::Zero(dim, dim);
      kkt.topLeftCorner(n_, n_) = h;
      kkt.topLeftCorner(n_, n_).diagonal().array() += delta;
      if (me_ > 0) {
        kkt.topRightCorner(n_, me_) = ev.jac_h.transpose();
        kkt.bottomLeftCorner(me_, n_) = ev.jac_h;
        kkt.bottomRightCorner(me_, me_).diagonal().array() -= delta * 1e-4;
      }
      Vector full_rhs(dim);
      full_rhs.head(n_) = rhs;
      if (me_ > 0) full_rhs.tail(me_) = -ev.h;
      Eigen::PartialPivLU<Matrix> lu(kkt);
      Vector sol = lu.solve(full_rhs);
      double err = (kkt * sol - full_rhs).lpNorm<Eigen::Infinity>();
      double scale = 1.0 + full_rhs.lpNorm<Eigen::Infinity>();
      if (sol.allFinite() && err <= 1e-8 * scale) {
        dx = sol.head(n_);
        dy = sol.tail(me_);
        ds = -r_in - ev.jac_g * dx;
        dz = (-rc - it.z.cwiseProduct(ds)).cwiseQuotient(it.s);
        dzb.resize(nb_);
        for (Eigen::Index k = 0; k < nb_; ++k) {
          Eigen::Index j = layout_.bounded[k];
          dzb[k] = (-rb[k] - it.zb[k] * dx[j]) / gap[k];
        }
        return true;
      }
      delta = delta == 0.0 ? 1e-10 * (1.0 + h.diagonal().cwiseAbs().maxCoeff()) : delta * 100.0;
    }
    return false;
  }

  double max_step(const Iterate& it, const Vector& ds, const Vector& dz, const Vector& dzb,
                  const Vector& dx) const {
    double alpha = 1.0;
    auto limit = [&](double value, double step) {
      if (step < 0.0) alpha = std::min(alpha, -kFractionToBoundary * value / step);
    };
    for (Eigen::Index i = 0; i < mi_; ++i) {
      limit(it.s[i], ds[i]);
      limit(it.z[i], dz[i]);
    }
    Vector gap = bound_gap(it);
    for (Eigen::Index k = 0; k < nb_; ++k) {
      limit(gap[k], dx[layout_.bounded[k]]);
      limit(it.zb[k], dzb[k]);
    }
    return alpha;
  }

  // Newton on the equations of the active set the interior iterate points
  // at: bounds whose multiplier dominates the gap are fixed, other
  // multipliers are zero and the barrier is gone. Small variables then keep
  // full relative accuracy instead of carrying mu / x in their multiplier.
  // The result is kept only when its residuals are no worse.
  void polish(KktResult& best) const {
    Iterate it;
    it.x = best.x;
    it.y.resize(me_);
    it.z.resize(mi_);
    it.zb = Vector::Zero(nb_);
    for (Eigen::Index j = 0; j < me_; ++j) it.y[j] = best.multipliers[layout_.equalities[j]];
    for (Eigen::Index i = 0; i < mi_; ++i) it.z[i] = best.multipliers[layout_.inequalities[i]];
    Evaluation ev = evaluate(it.x);
    if (!ev.finite) return;
    // Constraint values carry rounding at the scale of their terms.
    const double rounding = 64.0 * std::numeric_limits<double>::epsilon() *
                            (1.0 + std::max(inf_norm(ev.g), inf_norm(ev.h)));

    std::vector<bool> fixed(static_cast<std::size_t>(n_), false);
    for (Eigen::Index k = 0; k < nb_; ++k) {
      Eigen::Index j = layout_.bounded[k];
      if (it.x[j] - p_.lower[j] < best.bound_multipliers[j]) {
        fixed[static_cast<std::size_t>(j)] = true;
        it.x[j] = p_.lower[j];
      }
    }
    std::vector<Eigen::Index> free, active;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (!fixed[static_cast<std::size_t>(j)]) free.push_back(j);
    }
    for (Eigen::Index i = 0; i < mi_; ++i) {
      if (std::max(-ev.g[i], 0.0) < it.z[i]) {
        active.push_back(i);
      } else {
        it.z[i] = 0.0;
      }
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    const auto na = static_cast<Eigen::Index>(active.size());
    const Eigen::Index dim = nf + me_ + na;
    if (dim == 0) return;

    for (int round = 0; round < 3; ++round) {
      ev = evaluate(it.x);
      if (!ev.finite) return;
      Vector rd = ev.grad;
      if (me_ > 0) rd += ev.jac_h.transpose() * it.y;
      if (mi_ > 0) rd += ev.jac_g.transpose() * it.z;
      Matrix w = lagrangian_hessian(it);
      Matrix k = Matrix::Zero(dim, dim);
      Vector f(dim);
      for (Eigen::Index a = 0; a < nf; ++a) {
        f[a] = rd[free[a]];
        for (Eigen::Index b = 0; b < nf; ++b) k(a, b) = w(free[a], free[b]);
        for (Eigen::Index j = 0; j < me_; ++j) k(a, nf + j) = k(nf + j, a) = ev.jac_h(j, free[a]);
        for (Eigen::Index c = 0; c < na; ++c) k(a, nf + me_ + c) = k(nf + me_ + c, a) = ev.jac_g(active[c], free[a]);
      }
      for (Eigen::Index j = 0; j < me_; ++j) f[nf + j] = ev.h[j];
      for (Eigen::Index c = 0; c < na; ++c) f[nf + me_ + c] = ev.g[active[c]];
      Eigen::FullPivLU<Matrix> lu(k);
      Vector step = lu.solve(-f);
      if (!step.allFinite() || (k * step + f).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + inf_norm(f))) return;
      for (Eigen::Index a = 0; a < nf; ++a) it.x[free[a]] += step[a];
      for (Eigen::Index j = 0; j < me_; ++j) it.y[j] += step[nf + j];
      for (Eigen::Index c = 0; c < na; ++c) it.z[active[c]] += step[nf + me_ + c];
    }

    ev = evaluate(it.x);
    if (!ev.finite) return;
    Vector rd = ev.grad;
    if (me_ > 0) rd += ev.jac_h.transpose() * it.y;
    if (mi_ > 0) rd += ev.jac_g.transpose() * it.z;
    for (Eigen::Index k = 0; k < nb_; ++k) {
      Eigen::Index j = layout_.bounded[k];
      if (fixed[static_cast<std::size_t>(j)]) it.zb[k] = rd[j];
    }
    it.s = (-ev.g).cwiseMax(0.0);
    KktResiduals r = residuals_at(it, ev);
    const double bar = std::max(best.residuals.max(), opt_.tolerance);
    if (!(std::max({r.stationarity, r.dual, r.complementarity}) <= bar && r.primal <= std::max(bar, rounding))) return;
    best.x = it.x;
    best.multipliers = pack_multipliers(it);
    best.bound_multipliers = pack_bounds(it);
    best.objective = ev.f;
    best.residuals = r;
  }

  Vector pack_multipliers(const Iterate& it) const {
    Vector m = Vector::Zero(static_cast<Eigen::Index>(p_.constraints.size()));
    for (Eigen::Index j = 0; j < me_; ++j) m[layout_.equalities[j]] = it.y[j];
    for (Eigen::Index i = 0; i < mi_; ++i) m[layout_.inequalities[i]] = it.z[i];
    return m;
  }

  Vector pack_bounds(const Iterate& it) const {
    Vector b = Vector::Zero(n_);
    for (Eigen::Index k = 0; k < nb_; ++k) b[layout_.bounded[k]] = it.zb[k];
    return b;
  }

  const NlpProblem& p_;
  KktOptions opt_;
  Layout layout_;
  Eigen::Index n_ = 0, me_ = 0, mi_ = 0, nb_ = 0;
};

void check_shape(const NlpProblem& problem, const Vector& start) {
  if (problem.dimension <= 0 || start.size() != problem.dimension) {
    throw Error(ErrorCode::kInvalidArgument, "kkt_solve: start point has wrong dimension");
  }
  if (problem.lower.size() != 0 && problem.lower.size() != problem.dimension) {
    throw Error(ErrorCode::kInvalidArgument, "kkt_solve: lower bounds have wrong dimension");
  }
  if (!problem.objective || !problem.gradient) {
    throw Error(ErrorCode::kInvalidArgument, "kkt_solve: objective and gradient are required");
  }
}

}  // namespace

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

Constraint linear_constraint(Vector a, double b, Constraint::Kind kind) {
  Constraint c;
  c.kind = kind;
  c.value = [a, b](const Vector& x) { return a.dot(x) - b; };
  c.gradient = [a](const Vector&) { return a; };
  return c;
}

KktResult kkt_solve(const NlpProblem& problem, const Vector& start, const KktOptions& options) {
  check_shape(problem, start);
  Solver solver(problem, options);
  return solver.run(start);
}

KktResult kkt_solve_scaled(const NlpProblem& problem, const Vector& start, const ProblemScaling& scaling,
                           const KktOptions& options) {
  check_shape(problem, start);
  const Vector d = scaling.variables;
  const double c = scaling.objective;
  if (d.size() != problem.dimension || !(d.array() > 0.0).all() || !(c > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "kkt_solve_scaled: scales must be positive");
  }
  NlpProblem scaled;
  scaled.dimension = problem.dimension;
  scaled.objective = [&problem, d, c](const Vector& y) { return c * problem.objective(d.cwiseProduct(y)); };
  scaled.gradient = [&problem, d, c](const Vector& y) {
    return Vector(c * d.cwiseProduct(problem.gradient(d.cwiseProduct(y))));
  };
  if (problem.hessian) {
    scaled.hessian = [&problem, d, c](const Vector& y) {
      return Matrix(c * d.asDiagonal() * problem.hessian(d.cwiseProduct(y)) * d.asDiagonal());
    };
  }
  for (const Constraint& con : problem.constraints) {
    Constraint sc;
    sc.kind = con.kind;
    sc.value = [&con, d](const Vector& y) { return con.value(d.cwiseProduct(y)); };
    sc.gradient = [&con, d](const Vector& y) { return Vector(d.cwiseProduct(con.gradient(d.cwiseProduct(y)))); };
    if (con.hessian) {
      sc.hessian = [&con, d](const Vector& y) {
        return Matrix(d.asDiagonal() * con.hessian(d.cwiseProduct(y)) * d.asDiagonal());
      };
    }
    scaled.constraints.push_back(std::move(sc));
  }
  if (problem.lower.size() == problem.dimension) scaled.lower = problem.lower.cwiseQuotient(d);

  Solver solver(scaled, options);
  KktResult r = solver.run(start.cwiseQuotient(d));
  r.x = d.cwiseProduct(r.x);
  r.multipliers /= c;
  r.bound_multipliers = r.bound_multipliers.cwiseQuotient(d) / c;
  r.objective /= c;
  r.residuals = kkt_residuals(problem, r.x, r.multipliers, r.bound_multipliers);
  return r;
}

KktResiduals kkt_residuals(const NlpProblem& problem, const Vector& x, const Vector& multipliers,
                           const Vector& bound_multipliers) {
  check_shape(problem, x);
  Solver solver(problem, KktOptions{});
  return solver.residuals_for(x, multipliers, bound_multipliers);
}

}  // namespace energyecon::numerics
