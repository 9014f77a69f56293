#include "energyecon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "energyecon/cost.hpp"
#include "energyecon/exchange.hpp"
#include "energyecon/money_prices.hpp"
#include "energyecon/report.hpp"
#include "energyecon/scenario_io.hpp"

namespace energyecon {

namespace {

constexpr double kProduced = 1e-9;

InvariantCheck check(std::string name, double value, double tolerance, std::string note = {}) {
  InvariantCheck c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tolerance;
  c.passed = std::isfinite(value) && value <= tolerance;
  c.note = std::move(note);
  return c;
}

InvariantCheck skipped(std::string name, double tolerance, std::string note) {
  InvariantCheck c;
  c.name = std::move(name);
  c.tolerance = tolerance;
  c.applicable = false;
  c.note = std::move(note);
  return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Discounted capacity-value stream recomputed from lambda, phi and the
// survival factor, independently of the capital-plan solver.
double fisher_identity_gap(const EconomyScenario& s, const SolutionBundle& b) {
  const int T = s.horizon;
  double worst = 0.0;
  for (std::size_t l = 0; l < s.num_prime_movers(); ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    const auto k = static_cast<Eigen::Index>(s.prime_mover_good_index(l));
    const double d = s.prime_movers[l].depreciation;
    for (int t = 0; t + 1 < T; ++t) {
      if (!(b.quantities(k, t) > kProduced)) continue;
      double stream = 0.0;
      for (int u = t + 1; u < T; ++u) {
        double discount = b.lambda[static_cast<std::size_t>(u)] / b.lambda[static_cast<std::size_t>(t)];
        stream += discount * std::pow(d, u - t - 1) * b.phi(li, u);
      }
      worst = std::max(worst, std::abs(b.tau(k, t) - stream));
    }
  }
  return worst;
}

// Every joule spent building prime movers is charged to some unit-period of
// service before the horizon ends.
double ledger_replay_gap(const EconomyScenario& s, const SolutionBundle& b, const EmbodiedAccount& acc) {
  const int T = s.horizon;
  const std::vector<double> eps = s.epsilon();
  double worst = 0.0;
  for (std::size_t l = 0; l < s.num_prime_movers(); ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    const auto k = static_cast<Eigen::Index>(s.prime_mover_good_index(l));
    const PrimeMoverSpec& pm = s.prime_movers[l];
    double spent = pm.initial_endowment > 0.0 ? pm.initial_endowment * pm.build_energy.value_or(0.0) : 0.0;
    for (int t = 0; t + 1 < T; ++t) {
      for (std::size_t m = 0; m < eps.size(); ++m) {
        spent += eps[m] * b.allocations[static_cast<std::size_t>(t)](static_cast<Eigen::Index>(m), k);
      }
    }
    double charged = 0.0;
    for (int t = 0; t < T; ++t) charged += acc.service_overhead(li, t) * b.endowment(li, t);
    worst = std::max(worst, std::abs(charged - spent) / std::max(1.0, spent));
  }
  return worst;
}

// Cost minimum of a CobbDouglas technology by exhaustive search over all
// but the last used input, which is pinned by the output requirement.
double grid_cost_gap(const ProductionTech& tech, std::span<const double> prices, double quantity, int resolution) {
  std::vector<std::size_t> used;
  for (std::size_t l = 0; l < tech.coefficients.size(); ++l) {
    if (tech.coefficients[l] > 0.0) used.push_back(l);
  }
  CostMinimum exact = cost_min(tech, prices, quantity);
  if (used.size() == 1) {
    double x = std::pow(quantity / tech.scale, 1.0 / tech.coefficients[used[0]]);
    return rel(prices[used[0]] * x, exact.cost);
  }
  const std::size_t last = used.back();
  used.pop_back();
  numerics::GridOracleRequest req;
  req.sense = numerics::Sense::kMinimize;
  req.resolution = resolution;
  req.workers = 1;
  for (std::size_t l : used) {
    req.lower.push_back(0.0);
    req.upper.push_back(3.0 * exact.inputs[l]);
  }
  auto pinned = [&](std::span<const double> z) {
    double prod = tech.scale;
    for (std::size_t i = 0; i < used.size(); ++i) prod *= std::pow(z[i], tech.coefficients[used[i]]);
    return prod > 0.0 ? std::pow(quantity / prod, 1.0 / tech.coefficients[last]) : numerics::kInf;
  };
  req.feasible = [&](std::span<const double> z) { return std::isfinite(pinned(z)); };
  req.objective = [&](std::span<const double> z) {
    double c = prices[last] * pinned(z);
    for (std::size_t i = 0; i < used.size(); ++i) c += prices[used[i]] * z[i];
    return c;
  };
  numerics::GridOracleResult g = numerics::grid_oracle(req);
  return rel(g.value, exact.cost);
}

double production_gradient_gap(const EconomyScenario& s, std::mt19937_64& rng, int points) {
  std::uniform_real_distribution<double> draw(0.1, 10.0);
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    const ProductionTech& tech = s.technologies[static_cast<std::size_t>(p) % s.technologies.size()];
    std::vector<double> x(tech.coefficients.size());
    for (double& v : x) v = draw(rng);
    ProductionValue pv = eval_production(tech, x);
    for (std::size_t l = 0; l < x.size(); ++l) {
      const double h = 1e-5 * x[l];
      std::vector<double> up = x, dn = x;
      up[l] += h;
      dn[l] -= h;
      double fd = (production_output(tech, up) - production_output(tech, dn)) / (2.0 * h);
      double an = pv.marginal_productivities[l];
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-12));
    }
  }
  return worst;
}

double utility_gradient_gap(const EconomyScenario& s, std::mt19937_64& rng, int points) {
  std::uniform_real_distribution<double> draw(0.1, 10.0);
  UtilityModel u = s.utility();
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    Matrix q(u.weights.rows(), u.weights.cols());
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = draw(rng);
    UtilityValue uv = eval_utility(u, q);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      if (!(u.weights(i) > 0.0)) continue;
      const double h = 1e-5 * q(i);
      Matrix up = q, dn = q;
      up(i) += h;
      dn(i) -= h;
      double fd = (eval_utility(u, up).utility - eval_utility(u, dn).utility) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - uv.marginals(i)) / std::abs(uv.marginals(i)));
    }
  }
  return worst;
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return !c.applicable || c.passed; });
}

VerifyReport run_invariant_suite(const EconomyScenario& s, const VerifyOptions& opts) {
  VerifyReport rep;
  rep.scenario_hash = scenario_hash(s);
  rep.seed = opts.seed;
  auto& out = rep.checks;

  AutarkyOptions aopt;
  aopt.fd_step = s.solver.fd_step;
  const AutarkyEquilibrium eq = solve_autarky(s, aopt);
  const SolutionBundle& b = eq.bundle;
  const AutarkyDiagnostics& g = eq.diagnostics;
  const int T = s.horizon;

  out.push_back(check("planner-kkt", g.planner.max(), 1e-6));
  out.push_back(check("producer-kkt-at-bundle", g.producer.max(), 1e-6));
  out.push_back(check("producer-resolve-kkt", g.producer_resolve.max(), 1e-6));
  out.push_back(check("energy-sector-stationarity", g.surplus_stationarity, 1e-6));
  if (s.num_energy_goods() >= 2) {
    out.push_back(check("equal-meroi", g.meroi_spread, 1e-6));
  } else {
    out.push_back(skipped("equal-meroi", 1e-6, "fewer than two energy goods"));
  }
  if (s.num_energy_goods() >= 1 && T >= 2) {
    out.push_back(check("discount-meroi", g.beta_meroi_gap, 1e-6));
  } else {
    out.push_back(skipped("discount-meroi", 1e-6, "no energy production"));
  }
  out.push_back(check("fisher-capital-identity", fisher_identity_gap(s, b), 1e-8));
  out.push_back(check("consumer-foc", g.consumer_foc, 1e-6));
  out.push_back(check("euler", g.euler, 1e-6));
  out.push_back(check("energy-budget", std::max(g.budget_violation, g.budget_slack_binding), 1e-6));

  double dec_gap = 0.0, avg_gap = 0.0, negative = 0.0;
  for (const TransferDecomposition& d : eq.decomposition) {
    const auto k = static_cast<Eigen::Index>(*s.find_good(d.good));
    dec_gap = std::max(dec_gap, rel(d.psi + d.theta, b.tau(k, d.period)));
    avg_gap = std::max(avg_gap, rel(d.tau_avg * (1.0 + d.mu), d.tau));
    negative = std::max({negative, -d.psi, -d.theta});
  }
  out.push_back(check("transfer-decomposition", std::max(dec_gap, negative), 1e-6));
  out.push_back(check("average-marginal-link", avg_gap, 1e-6));
  if (g.allocation_status == "ok") {
    out.push_back(check("effective-assignment", g.effective_assignment, 1e-6));
  } else {
    out.push_back(skipped("effective-assignment", 1e-6, g.allocation_status));
  }

  std::mt19937_64 rng(opts.seed);
  out.push_back(check("gradient-production", production_gradient_gap(s, rng, opts.gradient_points), 1e-6));
  out.push_back(check("gradient-utility", utility_gradient_gap(s, rng, opts.gradient_points), 1e-6));

  double grid_gap = 0.0;
  int grid_cases = 0;
  for (const TransferDecomposition& d : eq.decomposition) {
    const ProductionTech* tech = s.technology_for(d.good);
    if (tech == nullptr || tech->form != TechForm::kCobbDouglas) continue;
    int used = 0;
    for (double a : tech->coefficients) used += a > 0.0 ? 1 : 0;
    if (used > 3) continue;
    std::vector<double> prices(s.num_prime_movers());
    for (std::size_t l = 0; l < prices.size(); ++l) {
      prices[l] = s.prime_movers[l].epsilon + b.phi(static_cast<Eigen::Index>(l), d.period);
    }
    const auto k = static_cast<Eigen::Index>(*s.find_good(d.good));
    grid_gap = std::max(grid_gap, grid_cost_gap(*tech, prices, b.quantities(k, d.period), s.solver.grid_resolution));
    if (++grid_cases == 4) break;
  }
  if (grid_cases > 0) {
    out.push_back(check("grid-oracle-cost-min", grid_gap, 1e-3));
  } else {
    out.push_back(skipped("grid-oracle-cost-min", 1e-3, "no CobbDouglas good with at most three inputs"));
  }

  // Embodied energy needs build history for every initial stock.
  bool history = std::all_of(s.prime_movers.begin(), s.prime_movers.end(),
                             [](const PrimeMoverSpec& p) { return p.initial_endowment <= 0.0 || p.build_energy; });
  std::optional<EmbodiedAccount> acc;
  if (history) {
    acc = embodied_energy(s, b, eq.decomposition, s.solver.fd_step);
    out.push_back(check("embodied-ledger-replay", ledger_replay_gap(s, b, *acc), 1e-9));
    double split = 0.0;
    for (const TransferDecomposition& d : eq.decomposition) {
      const auto k = static_cast<Eigen::Index>(*s.find_good(d.good));
      const int t = d.period;
      split = std::max({split, rel(acc->gamma(k, t), acc->psi(k, t) + acc->overhead(k, t)), -acc->overhead(k, t),
                        -acc->gamma_avg(k, t)});
    }
    out.push_back(check("embodied-decomposition", split, 1e-12));
    double gap = 0.0;
    for (int t = 0; t < T; ++t) {
      std::vector<std::string> goods;
      std::vector<double> tau, gamma, theta, overhead;
      for (const TransferDecomposition& d : eq.decomposition) {
        if (d.period != t) continue;
        const auto k = static_cast<Eigen::Index>(*s.find_good(d.good));
        goods.push_back(d.good);
        tau.push_back(b.tau(k, t));
        gamma.push_back(acc->gamma(k, t));
        theta.push_back(acc->theta(k, t));
        overhead.push_back(acc->overhead(k, t));
      }
      for (const GapRow& r : transfer_embodied_gap(goods, tau, gamma, theta, overhead)) {
        gap = std::max(gap, std::abs(r.residual) / std::max(1.0, std::abs(r.tau)));
      }
    }
    out.push_back(check("transfer-embodied-gap", gap, 1e-9));
  } else {
    for (const char* n : {"embodied-ledger-replay", "embodied-decomposition", "transfer-embodied-gap"}) {
      out.push_back(skipped(n, 1e-9, "initial stock without build energy"));
    }
  }

  if (s.money && !s.money->fiat) {
    std::vector<MoneyState> path = money_path(s, eq);
    const auto ids = s.good_ids();
    double identity = 0.0, neutrality = 0.0, proportional = 0.0;
    bool fit_checked = false;
    for (int t = 0; t < T; ++t) {
      std::vector<double> tau(ids.size());
      for (std::size_t k = 0; k < ids.size(); ++k) tau[k] = b.tau(static_cast<Eigen::Index>(k), t);
      const MoneyState& m = path[static_cast<std::size_t>(t)];
      PriceTable base = price_table(ids, tau, m);
      MoneyState doubled = m;
      doubled.nominal_quantity *= 2.0;
      PriceTable twice = price_table(ids, tau, doubled);
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const PriceRow& r = base.rows[k];
        if (!(r.tau > 0.0)) continue;
        identity = std::max(identity, rel(r.nominal_price * base.synthetic_transfer, r.tau));
        identity = std::max(identity, rel(r.real_price * base.real_transfer, r.tau));
        neutrality = std::max(neutrality, std::abs(twice.rows[k].nominal_price - 2.0 * r.nominal_price) /
                                              std::abs(2.0 * r.nominal_price));
        for (std::size_t j = 0; j < ids.size(); ++j) {
          if (!(base.rows[j].tau > 0.0)) continue;
          double ratio = base.relative_nominal(ids[k], ids[j]);
          neutrality = std::max(neutrality, std::abs(twice.relative_nominal(ids[k], ids[j]) - ratio) / std::abs(ratio));
        }
      }
      if (acc) {
        try {
          ProportionalityReport pr = proportionality_report(base, *acc, t);
          proportional = std::max(proportional, pr.max_identity_residual);
          fit_checked = true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateFit && e.code() != ErrorCode::kInvalidArgument) throw;
        }
      }
    }
    out.push_back(check("nominal-price-identity", identity, 1e-9));
    out.push_back(check("money-neutrality", neutrality, 1e-14));
    if (fit_checked) {
      out.push_back(check("proportionality-identity", proportional, 1e-9));
    } else {
      out.push_back(skipped("proportionality-identity", 1e-9, "no period with a usable fit"));
    }
    if (T >= 2) {
      PriceDynamics dyn = inflation_and_dynamics(path, b.tau);
      out.push_back(check("price-dynamics-identity", dyn.identity_residual, 1e-12));
    } else {
      out.push_back(skipped("price-dynamics-identity", 1e-12, "single period"));
    }
  } else {
    const char* why = s.money ? "fiat money" : "no money block";
    out.push_back(skipped("nominal-price-identity", 1e-9, why));
    out.push_back(skipped("money-neutrality", 1e-14, why));
    out.push_back(skipped("proportionality-identity", 1e-9, why));
    out.push_back(skipped("price-dynamics-identity", 1e-12, why));
  }

  if (opts.exchange) {
    // Two copies of the same agent face identical curves and must not trade.
    std::vector<std::vector<MarketPosition>> agents(2);
    BilateralMarket pair;
    int goods = 0;
    for (std::size_t f = 0; f < s.num_final_goods() && goods < 2; ++f) {
      const std::string& id = s.final_goods[f].id;
      const double q = b.quantities(static_cast<Eigen::Index>(f), 0);
      if (!(q > kProduced)) continue;
      MarketPosition p{sample_metc(eq, id, 0), q, 0.0};
      agents[0].push_back(p);
      agents[1].push_back(p);
      (goods == 0 ? pair.b : pair.c) = {p, p};
      ++goods;
    }
    if (goods > 0) {
      TatonnementResult tat = multi_agent_tatonnement(agents);
      double traded = 0.0;
      for (const GoodMarketResult& r : tat.goods) {
        for (double x : r.net_exports) traded = std::max(traded, std::abs(x));
      }
      if (goods == 2) {
        TradeOutcome o = optimal_bilateral_trade(pair);
        traded = std::max({traded, o.b.quantity, o.c.quantity, std::abs(o.gains)});
      }
      out.push_back(check("exchange-identical-agents", traded, 0.0));
    } else {
      out.push_back(skipped("exchange-identical-agents", 0.0, "no final good produced in the first period"));
    }
  } else {
    out.push_back(skipped("exchange-identical-agents", 0.0, "disabled"));
  }

  EconomyScenario round = parse_scenario(serialize_scenario(s));
  out.push_back(check("scenario-round-trip", scenario_hash(round) == rep.scenario_hash ? 0.0 : 1.0, 0.0));
  return rep;
}

std::string verify_table(const VerifyReport& rep) {
  std::string text = "scenario " + rep.scenario_hash + "  seed " + std::to_string(rep.seed) + "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-6s %-24s %-10s %s\n", "check", "result", "value", "tolerance", "note");
  text += line;
  for (const InvariantCheck& c : rep.checks) {
    const char* result = !c.applicable ? "skip" : (c.passed ? "pass" : "FAIL");
    std::string value = c.applicable ? format_number(c.value) : "-";
    std::snprintf(line, sizeof line, "%-28s %-6s %-24s %-10.3g %s\n", c.name.c_str(), result, value.c_str(), c.tolerance,
                  c.note.c_str());
    text += line;
  }
  text += rep.all_passed() ? "all checks passed\n" : "some checks failed\n";
  return text;
}

std::string verify_csv(const VerifyReport& rep) {
  std::string text = "check,applicable,passed,value,tolerance,note\n";
  for (const InvariantCheck& c : rep.checks) {
    std::string note = c.note;
    std::replace(note.begin(), note.end(), ',', ';');
    text += c.name + "," + (c.applicable ? "true" : "false") + "," + (c.passed ? "true" : "false") + "," +
            format_number(c.value) + "," + format_number(c.tolerance) + "," + note + "\n";
  }
  return text;
}

}  // namespace energyecon
