#include "energyecon/scenario_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace energyecon {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& field, const std::string& rule) {
  throw Error(ErrorCode::kValidation, field + ": " + rule);
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) invalid(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) invalid(path + "." + key, "required key is missing");
  return *it;
}

double number(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_number()) invalid(path + "." + key, "expected a number");
  return v.get<double>();
}

int integer(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_number_integer()) invalid(path + "." + key, "expected an integer");
  return v.get<int>();
}

std::string text(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) invalid(path + "." + key, "expected a string");
  return v.get<std::string>();
}

const json& array(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_array()) invalid(path + "." + key, "expected an array");
  return v;
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) invalid(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) invalid(path, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

TechForm parse_form(const std::string& s, const std::string& path) {
  if (s == "cobb_douglas") return TechForm::kCobbDouglas;
  if (s == "linear") return TechForm::kLinear;
  invalid(path, "unknown technology form '" + s + "' (cobb_douglas or linear)");
}

}  // namespace

EconomyScenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) invalid("$", "scenario must be an object");
  EconomyScenario s;
  if (doc.contains("name")) s.name = text(doc, "name", "$");
  s.horizon = integer(doc, "horizon", "$");

  for (const auto& pm : array(doc, "prime_movers", "$")) {
    const std::string path = "prime_movers[" + std::to_string(s.prime_movers.size()) + "]";
    PrimeMoverSpec p;
    p.id = text(pm, "id", path);
    p.epsilon = number(pm, "epsilon", path);
    p.power_rate = pm.contains("power_rate") ? number(pm, "power_rate", path) : p.epsilon;
    p.depreciation = number(pm, "depreciation", path);
    p.initial_endowment = number(pm, "initial_endowment", path);
    if (pm.contains("build_energy")) p.build_energy = number(pm, "build_energy", path);
    s.prime_movers.push_back(std::move(p));
  }
  if (doc.contains("energy_goods")) {
    for (const auto& e : array(doc, "energy_goods", "$")) {
      const std::string path = "energy_goods[" + std::to_string(s.energy_goods.size()) + "]";
      s.energy_goods.push_back({text(e, "id", path), number(e, "energy_content", path), number(e, "initial_stock", path)});
    }
  }
  for (const auto& f : array(doc, "final_goods", "$")) {
    const std::string path = "final_goods[" + std::to_string(s.final_goods.size()) + "]";
    s.final_goods.push_back({text(f, "id", path), {}});
  }

  const json& utility = member(doc, "utility", "$");
  if (utility.contains("form") && text(utility, "form", "utility") != "weighted_log") {
    invalid("utility.form", "only weighted_log is supported");
  }
  const json& weights = member(utility, "weights", "utility");
  if (!weights.is_object()) invalid("utility.weights", "expected an object keyed by final good");
  for (auto it = weights.begin(); it != weights.end(); ++it) {
    bool known = false;
    for (auto& f : s.final_goods) {
      if (f.id == it.key()) {
        f.weights = numbers(it.value(), "utility.weights." + it.key());
        known = true;
      }
    }
    if (!known) invalid("utility.weights." + it.key(), "not a final good");
  }

  for (const auto& t : array(doc, "technologies", "$")) {
    const std::string path = "technologies[" + std::to_string(s.technologies.size()) + "]";
    ProductionTech tech;
    tech.good = text(t, "good", path);
    tech.form = parse_form(text(t, "form", path), path + ".form");
    tech.scale = t.contains("scale") ? number(t, "scale", path) : 1.0;
    tech.coefficients.assign(s.prime_movers.size(), 0.0);
    const json& coef = member(t, "coefficients", path);
    if (!coef.is_object()) invalid(path + ".coefficients", "expected an object keyed by prime mover");
    for (auto it = coef.begin(); it != coef.end(); ++it) {
      std::size_t l = 0;
      while (l < s.prime_movers.size() && s.prime_movers[l].id != it.key()) ++l;
      if (l == s.prime_movers.size()) invalid(path + ".coefficients." + it.key(), "not a prime mover");
      if (!it.value().is_number()) invalid(path + ".coefficients." + it.key(), "expected a number");
      tech.coefficients[l] = it.value().get<double>();
    }
    s.technologies.push_back(std::move(tech));
  }

  if (doc.contains("money") && !doc.at("money").is_null()) {
    const json& m = doc.at("money");
    MoneySpec money;
    if (m.contains("real_good")) money.real_good = text(m, "real_good", "money");
    money.real_quantity = number(m, "Q_m", "money");
    money.nominal_quantity = number(m, "Q_n", "money");
    if (m.contains("fiat")) {
      if (!m.at("fiat").is_boolean()) invalid("money.fiat", "expected a boolean");
      money.fiat = m.at("fiat").get<bool>();
    }
    s.money = money;
  }
  if (doc.contains("solver")) {
    const json& sv = doc.at("solver");
    if (!sv.is_object()) invalid("solver", "expected an object");
    if (sv.contains("tol")) s.solver.tolerance = number(sv, "tol", "solver");
    if (sv.contains("damping")) s.solver.damping = number(sv, "damping", "solver");
    if (sv.contains("max_iter")) s.solver.max_iterations = integer(sv, "max_iter", "solver");
    if (sv.contains("grid")) s.solver.grid_resolution = integer(sv, "grid", "solver");
    if (sv.contains("fd_step")) s.solver.fd_step = number(sv, "fd_step", "solver");
  }
  return s;
}

EconomyScenario parse_scenario(std::string_view content) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kValidation, std::string("$: malformed document: ") + e.what());
  }
  return scenario_from_json(doc);
}

EconomyScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoFailure, "cannot read scenario file " + path.string());
  return parse_scenario(buf.str());
}

json scenario_to_json(const EconomyScenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["horizon"] = s.horizon;
  doc["prime_movers"] = json::array();
  for (const auto& p : s.prime_movers) {
    json pm{{"id", p.id},
            {"epsilon", p.epsilon},
            {"power_rate", p.power_rate},
            {"depreciation", p.depreciation},
            {"initial_endowment", p.initial_endowment}};
    if (p.build_energy) pm["build_energy"] = *p.build_energy;
    doc["prime_movers"].push_back(std::move(pm));
  }
  doc["energy_goods"] = json::array();
  for (const auto& e : s.energy_goods) {
    doc["energy_goods"].push_back({{"id", e.id}, {"energy_content", e.energy_content}, {"initial_stock", e.initial_stock}});
  }
  doc["final_goods"] = json::array();
  json weights = json::object();
  for (const auto& f : s.final_goods) {
    doc["final_goods"].push_back({{"id", f.id}});
    weights[f.id] = f.weights;
  }
  doc["utility"] = {{"form", "weighted_log"}, {"weights", weights}};
  doc["technologies"] = json::array();
  for (const auto& t : s.technologies) {
    json coef = json::object();
    for (std::size_t l = 0; l < s.prime_movers.size() && l < t.coefficients.size(); ++l) {
      coef[s.prime_movers[l].id] = t.coefficients[l];
    }
    doc["technologies"].push_back({{"good", t.good},
                                   {"form", t.form == TechForm::kLinear ? "linear" : "cobb_douglas"},
                                   {"scale", t.scale},
                                   {"coefficients", coef}});
  }
  if (s.money) {
    doc["money"] = {{"real_good", s.money->real_good},
                    {"Q_m", s.money->real_quantity},
                    {"Q_n", s.money->nominal_quantity},
                    {"fiat", s.money->fiat}};
  }
  doc["solver"] = {{"tol", s.solver.tolerance},
                   {"damping", s.solver.damping},
                   {"max_iter", s.solver.max_iterations},
                   {"grid", s.solver.grid_resolution},
                   {"fd_step", s.solver.fd_step}};
  return doc;
}

std::string serialize_scenario(const EconomyScenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::string scenario_hash(const EconomyScenario& s) { return fnv1a_hex(scenario_to_json(s).dump()); }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoFailure, "cannot move " + tmp.string() + " into place");
  }
}

}  // namespace energyecon
