#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "energyecon/exchange.hpp"
#include "energyecon/money_prices.hpp"

namespace energyecon {

// "%.17g"; NaN and infinities as "nan", "inf", "-inf".
std::string format_number(double v);

struct PriceReportRow {
  std::string good;
  double tau = 0.0;
  double tau_avg = 0.0;
  double psi = 0.0;
  double theta = 0.0;
  double gamma_avg = 0.0;
  double eta = 0.0;
  double p_real = 0.0;
  double P_nominal = 0.0;
  double gap = 0.0;  // theta - Gamma
};

// One row per good for `period`. Missing pieces (no money block, no
// embodied account, good not produced) are NaN.
std::vector<PriceReportRow> price_rows(const EconomyScenario& scenario, const AutarkyEquilibrium& eq, int period,
                                       const PriceTable* prices, const EmbodiedAccount* account);

// Header: good_id,tau,tau_avg,psi,theta,gamma_avg,eta,p_real,P_nominal,gap
std::string prices_csv(const std::vector<PriceReportRow>& rows);

nlohmann::json matrix_json(const Matrix& m);
nlohmann::json bundle_json(const SolutionBundle& bundle);
nlohmann::json equilibrium_json(const EconomyScenario& scenario, const AutarkyEquilibrium& eq);
nlohmann::json price_table_json(const PriceTable& table);
nlohmann::json embodied_json(const EmbodiedAccount& account);
nlohmann::json proportionality_json(const ProportionalityReport& report);
nlohmann::json dynamics_json(const PriceDynamics& dynamics);
nlohmann::json tatonnement_json(const TatonnementResult& result, const std::vector<std::string>& agents);
nlohmann::json trade_json(const TradeOutcome& outcome);

enum class ReportFormat { kBoth, kCsv, kStructured };

// A finished run: a structured document plus any CSV tables, keyed by file
// stem. Emission is deterministic for identical contents.
struct RunReport {
  std::string command;
  std::string scenario_hash;
  nlohmann::json document = nlohmann::json::object();
  std::map<std::string, std::string> tables;  // stem -> CSV text
  std::string document_stem = "solution";
};

std::string tool_version();

// Writes `<stem>.json` (tool version and scenario hash added) and
// `<stem>.csv` files into `dir` atomically. Returns the paths written.
// Throws Error(kIoFailure).
std::vector<std::filesystem::path> emit_report(const RunReport& report, const std::filesystem::path& dir,
                                               ReportFormat format);

}  // namespace energyecon
