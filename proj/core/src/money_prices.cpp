#include "energyecon/money_prices.hpp"

#include "energyecon/cost.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace energyecon {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kDomainError, std::string(what) + " must be finite and > 0");
  }
}

}  // namespace

double MoneyState::synthetic_transfer() const {
  if (fiat) {
    throw Error(ErrorCode::kFiatMoney,
                "fiat money has no real counterpart, so its energy transfer per nominal unit is undefined");
  }
  require_positive(real_transfer, "real-money transfer");
  require_positive(real_quantity, "real-money quantity");
  require_positive(nominal_quantity, "nominal-money quantity");
  return real_transfer * real_quantity / nominal_quantity;
}

const PriceRow* PriceTable::find(const std::string& good) const {
  for (const auto& r : rows) {
    if (r.good == good) return &r;
  }
  return nullptr;
}

double PriceTable::relative_nominal(const std::string& a, const std::string& b) const {
  const PriceRow* ra = find(a);
  const PriceRow* rb = find(b);
  if (ra == nullptr || rb == nullptr) throw Error(ErrorCode::kInvalidArgument, "relative_nominal: unknown good");
  return ra->nominal_price / rb->nominal_price;
}

PriceTable price_table(std::span<const std::string> goods, std::span<const double> tau, const MoneyState& money) {
  if (goods.size() != tau.size()) throw Error(ErrorCode::kInvalidArgument, "price_table: goods and tau differ in length");
  PriceTable table;
  table.real_transfer = money.real_transfer;
  table.synthetic_transfer = money.synthetic_transfer();
  for (std::size_t k = 0; k < goods.size(); ++k) {
    table.rows.push_back({goods[k], tau[k], tau[k] / table.real_transfer, tau[k] / table.synthetic_transfer});
  }
  return table;
}

PriceDynamics inflation_and_dynamics(std::span<const MoneyState> money, const Matrix& tau) {
  const auto T = static_cast<Eigen::Index>(money.size());
  if (tau.cols() != T) throw Error(ErrorCode::kInvalidArgument, "inflation_and_dynamics: path lengths differ");
  PriceDynamics d;
  const Eigen::Index steps = std::max<Eigen::Index>(T - 1, 0);
  d.dln_real = Matrix::Zero(tau.rows(), steps);
  d.dln_nominal = Matrix::Zero(tau.rows(), steps);
  std::vector<double> ts(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) ts[static_cast<std::size_t>(t)] = money[static_cast<std::size_t>(t)].synthetic_transfer();
  for (Eigen::Index t = 1; t < T; ++t) {
    const MoneyState& now = money[static_cast<std::size_t>(t)];
    const MoneyState& before = money[static_cast<std::size_t>(t - 1)];
    double ratio = std::log(now.nominal_quantity / now.real_quantity) -
                   std::log(before.nominal_quantity / before.real_quantity);
    d.dln_money_ratio.push_back(ratio);
    d.inflation.push_back(ratio - (std::log(now.real_transfer) - std::log(before.real_transfer)));
    for (Eigen::Index k = 0; k < tau.rows(); ++k) {
      if (!(tau(k, t) > 0.0 && tau(k, t - 1) > 0.0)) {
        d.dln_real(k, t - 1) = d.dln_nominal(k, t - 1) = kNaN;
        continue;
      }
      double p_now = tau(k, t) / now.real_transfer, p_before = tau(k, t - 1) / before.real_transfer;
      double n_now = tau(k, t) / ts[static_cast<std::size_t>(t)];
      double n_before = tau(k, t - 1) / ts[static_cast<std::size_t>(t - 1)];
      d.dln_real(k, t - 1) = std::log(p_now) - std::log(p_before);
      d.dln_nominal(k, t - 1) = std::log(n_now) - std::log(n_before);
      d.identity_residual = std::max(d.identity_residual, std::abs(d.dln_nominal(k, t - 1) - d.dln_real(k, t - 1) - ratio));
    }
  }
  return d;
}

double amortized_build_energy(double build_energy, double lifetime_service) {
  if (!(build_energy >= 0.0)) throw Error(ErrorCode::kDomainError, "build energy must be >= 0");
  if (!(lifetime_service > 0.0)) throw Error(ErrorCode::kDivisionByZero, "lifetime service must be > 0");
  return build_energy / lifetime_service;
}

Matrix service_overhead(const EconomyScenario& s, const SolutionBundle& b, Matrix* build_energy) {
  const std::size_t L = s.num_prime_movers();
  const int T = s.horizon;
  const std::vector<double> eps = s.epsilon();
  Matrix overhead = Matrix::Zero(static_cast<Eigen::Index>(L), T);
  Matrix built = Matrix::Zero(static_cast<Eigen::Index>(L), T);
  for (std::size_t l = 0; l < L; ++l) {
    const PrimeMoverSpec& pm = s.prime_movers[l];
    const auto li = static_cast<Eigen::Index>(l);
    const auto k = static_cast<Eigen::Index>(s.prime_mover_good_index(l));
    const double d = pm.depreciation;

    // (units, overhead per unit-period, first period of service)
    struct Vintage {
      double units;
      double per_service;
      int first;
    };
    std::vector<Vintage> vintages;
    if (pm.initial_endowment > 0.0) {
      if (!pm.build_energy) {
        throw Error(ErrorCode::kMissingHistory, "no build energy recorded for the initial stock of " + pm.id);
      }
      double life = 0.0;
      for (int t = 0; t < T; ++t) life += std::pow(d, t);
      built(li, 0) = *pm.build_energy;
      vintages.push_back({pm.initial_endowment, amortized_build_energy(*pm.build_energy, life), 0});
    }
    for (int j = 0; j + 1 < T; ++j) {
      double units = b.quantities(k, j);
      if (!(units > 0.0)) continue;
      const Matrix& alloc = b.allocations.at(static_cast<std::size_t>(j));
      double spent = 0.0;
      for (std::size_t m = 0; m < L; ++m) spent += eps[m] * alloc(static_cast<Eigen::Index>(m), k);
      double life = 0.0;
      for (int t = j + 1; t < T; ++t) life += std::pow(d, t - 1 - j);
      built(li, j + 1) = spent / units;
      vintages.push_back({units, amortized_build_energy(spent / units, life), j + 1});
    }
    for (int t = 0; t < T; ++t) {
      double alive = 0.0, charged = 0.0;
      for (const Vintage& v : vintages) {
        if (t < v.first) continue;
        double surviving = v.units * std::pow(d, v.first == 0 ? t : t - v.first);
        alive += surviving;
        charged += surviving * v.per_service;
      }
      overhead(li, t) = alive > 0.0 ? charged / alive : 0.0;
    }
  }
  if (build_energy != nullptr) *build_energy = built;
  return overhead;
}

EmbodiedAccount embodied_energy(const EconomyScenario& s, const SolutionBundle& b,
                                std::span<const TransferDecomposition> decomposition, double step) {
  const std::size_t L = s.num_prime_movers();
  const auto K = static_cast<Eigen::Index>(s.num_goods());
  const int T = s.horizon;
  const std::vector<double> eps = s.epsilon();
  EmbodiedAccount acc;
  acc.goods = s.good_ids();
  acc.service_overhead = service_overhead(s, b, &acc.build_energy);
  for (Matrix* m : {&acc.psi, &acc.theta, &acc.overhead, &acc.gamma, &acc.gamma_avg, &acc.eta}) {
    *m = Matrix::Constant(K, T, kNaN);
  }
  for (const TransferDecomposition& d : decomposition) {
    auto found = s.find_good(d.good);
    if (!found) throw Error(ErrorCode::kInvalidArgument, "embodied_energy: unknown good " + d.good);
    const auto k = static_cast<Eigen::Index>(*found);
    const int t = d.period;
    if (t < 0 || t >= T) throw Error(ErrorCode::kInvalidArgument, "embodied_energy: period out of range");

    std::vector<double> unit_cost(L), direction(L, 0.0), x(L);
    double overhead = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const auto li = static_cast<Eigen::Index>(l);
      unit_cost[l] = eps[l] + acc.service_overhead(li, t);
      x[l] = b.allocations.at(static_cast<std::size_t>(t))(li, k);
      double r = d.marginal_requirements[l];
      double w = d.marginal_shares[l];
      if (w > 0.0 && std::isfinite(r)) {
        direction[l] = w * r;
        overhead += direction[l] * acc.service_overhead(li, t);
      }
    }
    const double q = b.quantities(k, t);
    if (!(q > 0.0)) continue;
    // Average embodiment as output moves along the producer's expansion
    // path: cost-minimizing at the producer's input prices for CobbDouglas,
    // the marginal direction from the observed allocation for Linear.
    const ProductionTech* tech = s.technology_for(d.good);
    std::vector<double> prices(L);
    for (std::size_t l = 0; l < L; ++l) prices[l] = eps[l] + b.phi(static_cast<Eigen::Index>(l), t);
    auto average = [&](double out) {
      double e = 0.0;
      if (tech != nullptr && tech->form == TechForm::kCobbDouglas) {
        CostMinimum c = cost_min(*tech, prices, out);
        for (std::size_t l = 0; l < L; ++l) e += unit_cost[l] * c.inputs[l];
      } else {
        for (std::size_t l = 0; l < L; ++l) e += unit_cost[l] * (x[l] + (out - q) * direction[l]);
      }
      return e / out;
    };
    acc.psi(k, t) = d.psi;
    acc.theta(k, t) = d.theta;
    acc.overhead(k, t) = overhead;
    acc.gamma(k, t) = d.psi + overhead;
    acc.gamma_avg(k, t) = average(q);
    acc.eta(k, t) = numerics::log_elasticity(average, q, step);
  }
  return acc;
}

std::vector<GapRow> transfer_embodied_gap(std::span<const std::string> goods, std::span<const double> tau,
                                          std::span<const double> gamma, std::span<const double> theta,
                                          std::span<const double> overhead) {
  const std::size_t n = goods.size();
  if (tau.size() != n || gamma.size() != n || theta.size() != n || overhead.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "transfer_embodied_gap: inputs differ in length");
  }
  std::vector<GapRow> rows;
  for (std::size_t k = 0; k < n; ++k) {
    GapRow r{goods[k], tau[k], gamma[k], theta[k] - overhead[k], 0.0};
    r.residual = r.tau - r.gamma - r.gap;
    rows.push_back(std::move(r));
  }
  return rows;
}

ProportionalityReport proportionality_report(const PriceTable& prices, const EmbodiedAccount& acc, int period) {
  if (period < 0 || period >= acc.gamma_avg.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "proportionality_report: period out of range");
  }
  ProportionalityReport rep;
  rep.period = period;
  const double ts = prices.synthetic_transfer;
  for (std::size_t k = 0; k < acc.goods.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    double ga = acc.gamma_avg(ki, period);
    if (!std::isfinite(ga)) continue;
    const PriceRow* row = prices.find(acc.goods[k]);
    if (row == nullptr) continue;
    ProportionalityRow r;
    r.good = acc.goods[k];
    r.nominal_price = row->nominal_price;
    r.gamma_avg = ga;
    r.eta = acc.eta(ki, period);
    r.gap = acc.theta(ki, period) - acc.overhead(ki, period);
    double implied = (r.gamma_avg * (1.0 + r.eta) + r.gap) / ts;
    r.identity_residual = std::abs(r.nominal_price - implied) / std::max(std::abs(r.nominal_price), 1e-300);
    rep.max_identity_residual = std::max(rep.max_identity_residual, r.identity_residual);
    rep.rows.push_back(std::move(r));
  }
  if (rep.rows.size() < 2) {
    throw Error(ErrorCode::kDegenerateFit, "proportionality_report: need at least two produced goods");
  }

  const auto n = static_cast<Eigen::Index>(rep.rows.size());
  Vector gx(n), py(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gx[i] = rep.rows[static_cast<std::size_t>(i)].gamma_avg;
    py[i] = rep.rows[static_cast<std::size_t>(i)].nominal_price;
  }
  const double mx = gx.mean(), my = py.mean();
  const double sxx = (gx.array() - mx).square().sum();
  if (!(sxx > 1e-24 * std::max(1.0, mx * mx) * static_cast<double>(n))) {
    throw Error(ErrorCode::kDegenerateFit, "proportionality_report: all average embodied energies are equal");
  }
  rep.slope = ((gx.array() - mx) * (py.array() - my)).sum() / sxx;
  rep.intercept = my - rep.slope * mx;
  double ss_res = 0.0;
  for (auto& r : rep.rows) {
    r.fitted = rep.intercept + rep.slope * r.gamma_avg;
    r.fit_residual = r.nominal_price - r.fitted;
    ss_res += r.fit_residual * r.fit_residual;
  }
  const double ss_tot = (py.array() - my).square().sum();
  rep.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.rows.size(); ++j) {
      const auto& a = rep.rows[i];
      const auto& c = rep.rows[j];
      PairPrediction pp;
      pp.a = a.good;
      pp.b = c.good;
      pp.nominal_ratio = a.nominal_price / c.nominal_price;
      pp.embodied_ratio = a.gamma_avg / c.gamma_avg;
      pp.predicted_ratio = (a.gamma_avg * (1.0 + a.eta) + a.gap) / (c.gamma_avg * (1.0 + c.eta) + c.gap);
      rep.pairs.push_back(std::move(pp));
    }
  }
  return rep;
}

std::string choose_real_money(const EconomyScenario& s, std::span<const TransferDecomposition> decomposition) {
  if (s.money && !s.money->real_good.empty()) return s.money->real_good;
  std::map<std::string, std::pair<double, int>> spread;
  for (const auto& d : decomposition) {
    auto& e = spread[d.good];
    e.first += std::abs(d.mu);
    e.second += 1;
  }
  std::string best;
  double best_mu = numerics::kInf;
  int best_count = 0;
  for (const auto& id : s.good_ids()) {
    auto it = spread.find(id);
    if (it == spread.end()) continue;
    double mean = it->second.first / it->second.second;
    int count = it->second.second;
    // Prefer goods produced in more periods, then the flattest marginal transfer.
    if (count > best_count || (count == best_count && mean < best_mu - 1e-12)) {
      best = id;
      best_mu = mean;
      best_count = count;
    }
  }
  if (best.empty()) throw Error(ErrorCode::kInvalidArgument, "choose_real_money: no produced good to serve as money");
  return best;
}

std::vector<MoneyState> money_path(const EconomyScenario& s, const AutarkyEquilibrium& eq) {
  if (!s.money) throw Error(ErrorCode::kInvalidArgument, "money_path: scenario has no money block");
  const std::string good = choose_real_money(s, eq.decomposition);
  auto k = s.find_good(good);
  if (!k) throw Error(ErrorCode::kInvalidArgument, "money_path: unknown real-money good " + good);
  std::vector<MoneyState> path;
  for (int t = 0; t < s.horizon; ++t) {
    MoneyState m;
    m.real_good = good;
    m.real_transfer = eq.bundle.tau(static_cast<Eigen::Index>(*k), t);
    m.real_quantity = s.money->real_quantity;
    m.nominal_quantity = s.money->nominal_quantity;
    m.fiat = s.money->fiat;
    path.push_back(std::move(m));
  }
  return path;
}

}  // namespace energyecon
