#include "energyecon/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "energyecon/scenario_io.hpp"

#ifndef ENERGYECON_VERSION
#define ENERGYECON_VERSION "0.0.0"
#endif

namespace energyecon {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json vector_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json residuals_json(const numerics::KktResiduals& r) {
  return {{"stationarity", r.stationarity}, {"primal", r.primal}, {"dual", r.dual}, {"complementarity", r.complementarity}};
}

json residuals_json(const ProducerResiduals& r) {
  return {{"stationarity", r.stationarity}, {"primal", r.primal}, {"dual", r.dual}, {"complementarity", r.complementarity}};
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<PriceReportRow> price_rows(const EconomyScenario& s, const AutarkyEquilibrium& eq, int period,
                                       const PriceTable* prices, const EmbodiedAccount* account) {
  if (period < 0 || period >= s.horizon) throw Error(ErrorCode::kInvalidArgument, "price_rows: period out of range");
  std::vector<PriceReportRow> rows;
  const auto ids = s.good_ids();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    PriceReportRow r;
    r.good = ids[k];
    r.tau = eq.bundle.tau(ki, period);
    r.tau_avg = r.psi = r.theta = r.gamma_avg = r.eta = r.p_real = r.P_nominal = r.gap = kNaN;
    if (const TransferDecomposition* d = eq.find(ids[k], period)) {
      r.tau_avg = d->tau_avg;
      r.psi = d->psi;
      r.theta = d->theta;
    }
    if (prices != nullptr) {
      if (const PriceRow* p = prices->find(ids[k])) {
        r.p_real = p->real_price;
        r.P_nominal = p->nominal_price;
      }
    }
    if (account != nullptr) {
      r.gamma_avg = account->gamma_avg(ki, period);
      r.eta = account->eta(ki, period);
      r.gap = account->theta(ki, period) - account->overhead(ki, period);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string prices_csv(const std::vector<PriceReportRow>& rows) {
  std::string out = "good_id,tau,tau_avg,psi,theta,gamma_avg,eta,p_real,P_nominal,gap\n";
  for (const auto& r : rows) {
    out += r.good;
    for (double v : {r.tau, r.tau_avg, r.psi, r.theta, r.gamma_avg, r.eta, r.p_real, r.P_nominal, r.gap}) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json bundle_json(const SolutionBundle& b) {
  json allocations = json::array();
  for (const auto& a : b.allocations) allocations.push_back(matrix_json(a));
  return {{"allocations", allocations},
          {"quantities", matrix_json(b.quantities)},
          {"lambda", vector_json(b.lambda)},
          {"tau", matrix_json(b.tau)},
          {"phi", matrix_json(b.phi)},
          {"over_assignment", vector_json(b.over_assignment)},
          {"surplus", vector_json(b.surplus)},
          {"assignment", matrix_json(b.assignment)},
          {"beta", matrix_json(b.beta)},
          {"endowment", matrix_json(b.endowment)},
          {"power", vector_json(b.power)}};
}

json equilibrium_json(const EconomyScenario& s, const AutarkyEquilibrium& eq) {
  json doc;
  doc["goods"] = s.good_ids();
  json movers = json::array();
  for (const auto& pm : s.prime_movers) movers.push_back(pm.id);
  doc["prime_movers"] = movers;
  doc["status"] = std::string(to_string(eq.status));
  doc["utility"] = eq.utility;
  doc["bundle"] = bundle_json(eq.bundle);

  json dec = json::array();
  for (const auto& d : eq.decomposition) {
    dec.push_back({{"good", d.good},
                   {"period", d.period + 1},
                   {"psi", d.psi},
                   {"theta", d.theta},
                   {"tau", d.tau},
                   {"tau_kkt", d.tau_kkt},
                   {"tau_avg", d.tau_avg},
                   {"mu", d.mu},
                   {"psi_uniform", d.psi_uniform},
                   {"theta_uniform", d.theta_uniform},
                   {"used_prime_movers", d.used_prime_movers},
                   {"marginal_shares", vector_json(d.marginal_shares)},
                   {"marginal_requirements", vector_json(d.marginal_requirements)}});
  }
  doc["decomposition"] = dec;

  const AutarkyDiagnostics& g = eq.diagnostics;
  doc["diagnostics"] = {{"status", std::string(to_string(g.status))},
                        {"iterations", g.iterations},
                        {"planner", residuals_json(g.planner)},
                        {"producer", residuals_json(g.producer)},
                        {"producer_resolve", residuals_json(g.producer_resolve)},
                        {"producer_tau_gap", g.producer_tau_gap},
                        {"producer_objective_gap", g.producer_objective_gap},
                        {"surplus_stationarity", g.surplus_stationarity},
                        {"surplus_tau_gap", g.surplus_tau_gap},
                        {"meroi_spread", g.meroi_spread},
                        {"beta_meroi_gap", g.beta_meroi_gap},
                        {"capital_stationarity", g.capital_stationarity},
                        {"fisher_gap", g.fisher_gap},
                        {"consumer_foc", g.consumer_foc},
                        {"euler", g.euler},
                        {"effective_assignment", g.effective_assignment},
                        {"budget_violation", g.budget_violation},
                        {"budget_slack_binding", g.budget_slack_binding},
                        {"scarcity_formula_gap", g.scarcity_formula_gap},
                        {"allocation_status", g.allocation_status},
                        {"multiplicity_checked", g.multiplicity_checked},
                        {"multiple_equilibria", g.multiple_equilibria},
                        {"max_residual", g.max_residual()}};

  const SurplusPlan& sp = eq.surplus_plan;
  doc["energy_sector"] = {{"status", std::string(to_string(sp.status))},
                          {"production", matrix_json(sp.production)},
                          {"tau", matrix_json(sp.tau)},
                          {"tau_avg", matrix_json(sp.tau_avg)},
                          {"meroi", matrix_json(sp.meroi)},
                          {"aeroi", matrix_json(sp.aeroi)},
                          {"surplus", vector_json(sp.surplus)}};
  const CapitalPlan& cp = eq.capital_plan;
  doc["capital"] = {{"status", std::string(to_string(cp.status))},
                    {"production", matrix_json(cp.production)},
                    {"tau", matrix_json(cp.tau)},
                    {"lifetime_value", matrix_json(cp.lifetime_value)},
                    {"power", vector_json(cp.power)}};
  return doc;
}

json price_table_json(const PriceTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"good", r.good}, {"tau", r.tau}, {"p_real", r.real_price}, {"P_nominal", r.nominal_price}});
  }
  return {{"tau_m", t.real_transfer}, {"tau_s", t.synthetic_transfer}, {"rows", rows}};
}

json embodied_json(const EmbodiedAccount& a) {
  return {{"goods", a.goods},
          {"psi", matrix_json(a.psi)},
          {"theta", matrix_json(a.theta)},
          {"Gamma", matrix_json(a.overhead)},
          {"gamma", matrix_json(a.gamma)},
          {"gamma_avg", matrix_json(a.gamma_avg)},
          {"eta", matrix_json(a.eta)},
          {"service_overhead", matrix_json(a.service_overhead)},
          {"build_energy", matrix_json(a.build_energy)}};
}

json proportionality_json(const ProportionalityReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows) {
    rows.push_back({{"good", x.good},
                    {"P_nominal", x.nominal_price},
                    {"gamma_avg", x.gamma_avg},
                    {"eta", x.eta},
                    {"gap", x.gap},
                    {"fitted", x.fitted},
                    {"fit_residual", x.fit_residual},
                    {"identity_residual", x.identity_residual}});
  }
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"a", p.a},
                     {"b", p.b},
                     {"nominal_ratio", p.nominal_ratio},
                     {"embodied_ratio", p.embodied_ratio},
                     {"predicted_ratio", p.predicted_ratio}});
  }
  return {{"period", r.period + 1},
          {"note", "gaps are marginal (theta - Gamma) while embodied energies are averages"},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"r_squared", r.r_squared},
          {"max_identity_residual", r.max_identity_residual},
          {"rows", rows},
          {"pairs", pairs}};
}

json dynamics_json(const PriceDynamics& d) {
  return {{"inflation", vector_json(d.inflation)},
          {"dln_money_ratio", vector_json(d.dln_money_ratio)},
          {"dln_real", matrix_json(d.dln_real)},
          {"dln_nominal", matrix_json(d.dln_nominal)},
          {"identity_residual", d.identity_residual}};
}

json tatonnement_json(const TatonnementResult& r, const std::vector<std::string>& agents) {
  json goods = json::array();
  for (const auto& g : r.goods) {
    goods.push_back({{"good", g.good},
                     {"level", g.level},
                     {"production", vector_json(g.production)},
                     {"consumption", vector_json(g.consumption)},
                     {"net_exports", vector_json(g.net_exports)},
                     {"post_transfer", vector_json(g.post_transfer)},
                     {"excess_demand", g.excess_demand},
                     {"spread", g.spread},
                     {"iterations", g.iterations},
                     {"status", std::string(to_string(g.status))}});
  }
  return {{"agents", agents},
          {"status", std::string(to_string(r.status))},
          {"goods", goods},
          {"commodity_prices", matrix_json(r.commodity_prices)},
          {"energy_released", vector_json(r.energy_released)}};
}

json trade_json(const TradeOutcome& o) {
  auto good = [](const GoodTrade& g) {
    return json{{"good", g.good},
                {"exporter", g.exporter < 0 ? json(nullptr) : json(g.exporter + 1)},
                {"quantity", g.quantity},
                {"autarky_transfer", {g.autarky_transfer[0], g.autarky_transfer[1]}},
                {"post_transfer", {g.post_transfer[0], g.post_transfer[1]}}};
  };
  return {{"b", good(o.b)},
          {"c", good(o.c)},
          {"commodity_price", o.commodity_price},
          {"reservation", {o.reservation[0], o.reservation[1]}},
          {"within_reservation", o.within_reservation},
          {"gains", o.gains},
          {"transaction_cost", o.transaction_cost},
          {"status", std::string(to_string(o.status))}};
}

std::string tool_version() { return ENERGYECON_VERSION; }

std::vector<std::filesystem::path> emit_report(const RunReport& report, const std::filesystem::path& dir,
                                               ReportFormat format) {
  std::vector<std::filesystem::path> written;
  if (format != ReportFormat::kCsv) {
    json doc = report.document;
    doc["tool"] = {{"name", "energyecon"}, {"version", tool_version()}};
    doc["command"] = report.command;
    doc["scenario_hash"] = report.scenario_hash;
    auto path = dir / (report.document_stem + ".json");
    write_file_atomic(path, doc.dump(2) + "\n");
    written.push_back(path);
  }
  if (format != ReportFormat::kStructured) {
    for (const auto& [stem, csv] : report.tables) {
      auto path = dir / (stem + ".csv");
      write_file_atomic(path, csv);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace energyecon
