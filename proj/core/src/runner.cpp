#include "energyecon/runner.hpp"

#include <algorithm>
#include <future>
#include <ostream>

#include "energyecon/scenario_io.hpp"
#include "energyecon/verify.hpp"

namespace energyecon {

namespace {

using nlohmann::json;

bool has_build_history(const EconomyScenario& s) {
  return std::all_of(s.prime_movers.begin(), s.prime_movers.end(),
                     [](const PrimeMoverSpec& p) { return p.initial_endowment <= 0.0 || p.build_energy; });
}

int period_index(const EconomyScenario& s, const RunOptions& o) {
  if (o.period < 1 || o.period > s.horizon) {
    throw Error(ErrorCode::kInvalidArgument,
                "--period " + std::to_string(o.period) + " is outside 1.." + std::to_string(s.horizon));
  }
  return o.period - 1;
}

std::string decomposition_csv(const AutarkyEquilibrium& eq) {
  std::string csv = "good_id,period,tau,psi,theta,tau_avg,mu\n";
  for (const auto& d : eq.decomposition) {
    csv += d.good + "," + std::to_string(d.period + 1);
    for (double v : {d.tau, d.psi, d.theta, d.tau_avg, d.mu}) csv += "," + format_number(v);
    csv += "\n";
  }
  return csv;
}

std::optional<PriceTable> period_prices(const EconomyScenario& s, const AutarkyEquilibrium& eq, int t) {
  if (!s.money || s.money->fiat) return std::nullopt;
  std::vector<MoneyState> path = money_path(s, eq);
  const auto ids = s.good_ids();
  std::vector<double> tau(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) tau[k] = eq.bundle.tau(static_cast<Eigen::Index>(k), t);
  return price_table(ids, tau, path[static_cast<std::size_t>(t)]);
}

int status_exit(Status s) { return s == Status::kOk ? kExitOk : kExitNoConvergence; }

int solve_autarky_command(const EconomyScenario& s, const RunOptions& o, RunReport& rep) {
  const int t = period_index(s, o);
  AutarkyOptions aopt;
  aopt.fd_step = s.solver.fd_step;
  AutarkyEquilibrium eq = solve_autarky(s, aopt);
  rep.document["equilibrium"] = equilibrium_json(s, eq);

  std::optional<PriceTable> prices = period_prices(s, eq, t);
  std::optional<EmbodiedAccount> acc;
  if (has_build_history(s)) acc = embodied_energy(s, eq.bundle, eq.decomposition, s.solver.fd_step);
  if (prices) rep.document["prices"] = price_table_json(*prices);
  if (acc) rep.document["embodied"] = embodied_json(*acc);
  rep.document["period"] = o.period;
  rep.tables["prices"] = prices_csv(price_rows(s, eq, t, prices ? &*prices : nullptr, acc ? &*acc : nullptr));
  rep.tables["decomposition"] = decomposition_csv(eq);
  return status_exit(eq.status);
}

int price_report_command(const EconomyScenario& s, const RunOptions& o, RunReport& rep) {
  const int t = period_index(s, o);
  if (!s.money) throw Error(ErrorCode::kInvalidArgument, "price-report needs a money block in the scenario");
  AutarkyOptions aopt;
  aopt.fd_step = s.solver.fd_step;
  AutarkyEquilibrium eq = solve_autarky(s, aopt);
  std::vector<MoneyState> path = money_path(s, eq);
  path.at(static_cast<std::size_t>(t)).synthetic_transfer();  // fiat money stops here
  std::optional<PriceTable> prices = period_prices(s, eq, t);
  EmbodiedAccount acc = embodied_energy(s, eq.bundle, eq.decomposition, s.solver.fd_step);

  rep.document_stem = "price_report";
  rep.document["period"] = o.period;
  rep.document["status"] = std::string(to_string(eq.status));
  rep.document["real_money"] = path.front().real_good;
  rep.document["prices"] = price_table_json(*prices);
  rep.document["embodied"] = embodied_json(acc);
  try {
    rep.document["proportionality"] = proportionality_json(proportionality_report(*prices, acc, t));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateFit) throw;
    rep.document["proportionality"] = {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
  }
  if (s.horizon >= 2) rep.document["dynamics"] = dynamics_json(inflation_and_dynamics(path, eq.bundle.tau));
  rep.tables["prices"] = prices_csv(price_rows(s, eq, t, &*prices, &acc));
  return status_exit(eq.status);
}

int verify_command(const EconomyScenario& s, const RunOptions& o, RunReport& rep, std::ostream& out) {
  VerifyOptions vopt;
  vopt.seed = o.seed;
  VerifyReport v = run_invariant_suite(s, vopt);
  json checks = json::array();
  for (const InvariantCheck& c : v.checks) {
    checks.push_back({{"name", c.name},
                      {"applicable", c.applicable},
                      {"passed", c.passed},
                      {"value", c.applicable ? json(c.value) : json(nullptr)},
                      {"tolerance", c.tolerance},
                      {"note", c.note}});
  }
  rep.document_stem = "verify";
  rep.document["seed"] = v.seed;
  rep.document["all_passed"] = v.all_passed();
  rep.document["checks"] = checks;
  rep.tables["verify"] = verify_csv(v);
  out << verify_table(v);
  return v.all_passed() ? kExitOk : kExitVerifyFailed;
}

// Solves every agent, at most worker_count() at a time.
std::vector<AutarkyEquilibrium> solve_agents(const std::vector<EconomyScenario>& agents) {
  std::vector<AutarkyEquilibrium> eqs(agents.size());
  const std::size_t workers = std::max<std::size_t>(1, numerics::worker_count());
  for (std::size_t start = 0; start < agents.size(); start += workers) {
    std::vector<std::future<AutarkyEquilibrium>> batch;
    for (std::size_t i = start; i < std::min(agents.size(), start + workers); ++i) {
      batch.push_back(std::async(std::launch::async, [&agents, i] {
        AutarkyOptions aopt;
        aopt.fd_step = agents[i].solver.fd_step;
        return solve_autarky(agents[i], aopt);
      }));
    }
    for (std::size_t j = 0; j < batch.size(); ++j) eqs[start + j] = batch[j].get();
  }
  return eqs;
}

int solve_exchange_command(const std::vector<EconomyScenario>& agents, const RunOptions& o, RunReport& rep) {
  int t = 0;
  for (const auto& s : agents) t = period_index(s, o);
  std::vector<AutarkyEquilibrium> eqs = solve_agents(agents);

  // Final goods every agent produces in the trading period.
  std::vector<std::string> goods;
  for (const auto& f : agents.front().final_goods) {
    bool everywhere = true;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      auto k = agents[i].find_good(f.id);
      everywhere = everywhere && k && *k < agents[i].num_final_goods() &&
                   eqs[i].bundle.quantities(static_cast<Eigen::Index>(*k), t) > 0.0;
    }
    if (everywhere) goods.push_back(f.id);
  }
  if (goods.empty()) throw Error(ErrorCode::kInvalidArgument, "solve-exchange: no final good is produced by every agent");

  std::vector<const AutarkyEquilibrium*> ptrs;
  for (const auto& e : eqs) ptrs.push_back(&e);
  std::vector<std::vector<MarketPosition>> positions(agents.size());
  std::string metc = "agent,good_id,quantity,tau\n";
  for (const std::string& g : goods) {
    std::vector<MetcCurve> curves = sample_metcs(ptrs, g, t);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const double q = eqs[i].bundle.quantities(static_cast<Eigen::Index>(*agents[i].find_good(g)), t);
      MarketPosition p{curves[i], q, 0.0};
      if (o.mode == DemandMode::kReSolve) p.demand_scale = q * p.autarky_transfer();
      positions[i].push_back(p);
      for (std::size_t j = 0; j < curves[i].quantities().size(); ++j) {
        metc += std::to_string(i + 1) + "," + g + "," + format_number(curves[i].quantities()[j]) + "," +
                format_number(curves[i].transfers()[j]) + "\n";
      }
    }
  }

  TatonnementResult tat = multi_agent_tatonnement(positions);
  std::vector<std::string> names;
  json agent_docs = json::array();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    names.push_back(agents[i].name.empty() ? "agent" + std::to_string(i + 1) : agents[i].name);
    agent_docs.push_back({{"name", names.back()},
                          {"scenario_hash", scenario_hash(agents[i])},
                          {"status", std::string(to_string(eqs[i].status))},
                          {"utility", eqs[i].utility}});
  }
  rep.document_stem = "exchange";
  rep.document["period"] = o.period;
  rep.document["mode"] = o.mode == DemandMode::kReSolve ? "re-solve" : "fixed-consumption";
  rep.document["agents"] = agent_docs;
  rep.document["tatonnement"] = tatonnement_json(tat, names);
  if (agents.size() == 2 && goods.size() >= 2) {
    BilateralMarket m{{positions[0][0], positions[1][0]}, {positions[0][1], positions[1][1]}};
    rep.document["bilateral"] = trade_json(optimal_bilateral_trade(m));
  }

  std::string csv = "good_id,agent,autarky_quantity,autarky_transfer,production,consumption,net_export,post_transfer,level\n";
  for (std::size_t g = 0; g < tat.goods.size(); ++g) {
    const GoodMarketResult& r = tat.goods[g];
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const MarketPosition& p = positions[i][g];
      csv += r.good + "," + std::to_string(i + 1);
      for (double v : {p.autarky_quantity, p.autarky_transfer(), r.production[i], r.consumption[i], r.net_exports[i],
                       r.post_transfer[i], r.level}) {
        csv += "," + format_number(v);
      }
      csv += "\n";
    }
  }
  rep.tables["exchange"] = csv;
  rep.tables["metc"] = metc;

  std::string joined;
  for (const auto& a : agents) joined += scenario_hash(a);
  rep.scenario_hash = fnv1a_hex(joined);
  return status_exit(tat.status);
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  if (name == "solve-autarky") return Command::kSolveAutarky;
  if (name == "solve-exchange") return Command::kSolveExchange;
  if (name == "price-report") return Command::kPriceReport;
  if (name == "verify") return Command::kVerify;
  return std::nullopt;
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::kSolveAutarky: return "solve-autarky";
    case Command::kSolveExchange: return "solve-exchange";
    case Command::kPriceReport: return "price-report";
    case Command::kVerify: return "verify";
  }
  return "unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoConvergence: return kExitNoConvergence;
    case ErrorCode::kInfeasible:
    case ErrorCode::kInsufficientSurplus:
    case ErrorCode::kNoFeasibleGridPoint: return kExitInfeasible;
    case ErrorCode::kIoFailure: return kExitIo;
    default: return kExitInvalid;
  }
}

std::string error_line(ErrorCode code, std::string_view message, const std::vector<Violation>& violations) {
  json j{{"error", std::string(to_string(code))}, {"message", std::string(message)}};
  if (!violations.empty()) {
    json v = json::array();
    for (const auto& x : violations) v.push_back({{"field", x.field}, {"rule", x.rule}});
    j["violations"] = v;
  }
  return j.dump();
}

EconomyScenario load_valid_scenario(const std::filesystem::path& path, std::vector<Violation>* violations) {
  EconomyScenario s = load_scenario(path);
  std::vector<Violation> v = validate_scenario(s);
  if (violations != nullptr) *violations = v;
  if (!v.empty()) throw Error(ErrorCode::kValidation, path.string() + ": " + v.front().field + ": " + v.front().rule);
  return s;
}

int run_scenario(Command command, const std::vector<std::filesystem::path>& scenarios, const RunOptions& options,
                 std::ostream& out, std::ostream& err) {
  std::vector<Violation> violations;
  try {
    if (command == Command::kSolveExchange ? scenarios.size() < 2 : scenarios.size() != 1) {
      throw Error(ErrorCode::kInvalidArgument, std::string(to_string(command)) +
                                                   (command == Command::kSolveExchange ? " needs at least two scenario files"
                                                                                       : " takes exactly one scenario file"));
    }
    std::vector<EconomyScenario> loaded;
    for (const auto& p : scenarios) loaded.push_back(load_valid_scenario(p, &violations));

    RunReport rep;
    rep.command = std::string(to_string(command));
    rep.scenario_hash = scenario_hash(loaded.front());
    int code = kExitOk;
    switch (command) {
      case Command::kSolveAutarky: code = solve_autarky_command(loaded.front(), options, rep); break;
      case Command::kPriceReport: code = price_report_command(loaded.front(), options, rep); break;
      case Command::kVerify: code = verify_command(loaded.front(), options, rep, out); break;
      case Command::kSolveExchange: code = solve_exchange_command(loaded, options, rep); break;
    }
    for (const auto& p : emit_report(rep, options.out, options.format)) out << "wrote " << p.string() << "\n";
    if (code == kExitNoConvergence) err << error_line(ErrorCode::kNoConvergence, "solver stopped before convergence; best iterate written") << "\n";
    return code;
  } catch (const Error& e) {
    err << error_line(e.code(), e.what(), e.code() == ErrorCode::kValidation ? violations : std::vector<Violation>{}) << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << error_line(ErrorCode::kIoFailure, e.what()) << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << error_line(ErrorCode::kInvalidArgument, e.what()) << "\n";
    return kExitInvalid;
  }
}

}  // namespace energyecon
