#include "energyecon/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace energyecon {

namespace {

// Root of a non-increasing `h` on [lo, hi] with h(lo) >= 0 >= h(hi).
double bracketed_root(const std::function<double(double)>& h, double lo, double hi) {
  double flo = h(lo), fhi = h(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t iterations = 200;
  auto [a, b] = boost::math::tools::toms748_solve(h, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52),
                                                  iterations);
  return 0.5 * (a + b);
}

void check_quantity(double q, const char* what) {
  if (!(q >= 0.0) || !std::isfinite(q)) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be >= 0");
}

}  // namespace

MetcCurve MetcCurve::constant(std::string good, double level) {
  if (!std::isfinite(level)) throw Error(ErrorCode::kInvalidArgument, "MetcCurve: level must be finite");
  MetcCurve c;
  c.good_ = std::move(good);
  c.kind_ = Kind::kConstant;
  c.a_ = level;
  return c;
}

MetcCurve MetcCurve::linear(std::string good, double intercept, double slope) {
  if (!std::isfinite(intercept) || !(slope >= 0.0) || !std::isfinite(slope)) {
    throw Error(ErrorCode::kInvalidArgument, "MetcCurve: linear curve needs a finite intercept and slope >= 0");
  }
  MetcCurve c;
  c.good_ = std::move(good);
  c.kind_ = Kind::kLinear;
  c.a_ = intercept;
  c.b_ = slope;
  return c;
}

MetcCurve MetcCurve::sampled(std::string good, std::vector<double> quantities, std::vector<double> transfers) {
  if (quantities.size() < 2 || quantities.size() != transfers.size()) {
    throw Error(ErrorCode::kInvalidArgument, "MetcCurve: a sampled curve needs two or more (q, tau) pairs");
  }
  for (std::size_t i = 1; i < quantities.size(); ++i) {
    if (!(quantities[i] > quantities[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "MetcCurve: sample quantities must be strictly increasing");
    }
    if (transfers[i] < transfers[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "MetcCurve: sampled transfers must be non-decreasing");
    }
  }
  MetcCurve c;
  c.good_ = std::move(good);
  c.kind_ = Kind::kSampled;
  c.q_ = std::move(quantities);
  c.v_ = std::move(transfers);
  return c;
}

MetcCurve MetcCurve::from_function(std::string good, std::function<double(double)> fn) {
  if (!fn) throw Error(ErrorCode::kInvalidArgument, "MetcCurve: empty function");
  MetcCurve c;
  c.good_ = std::move(good);
  c.kind_ = Kind::kFunction;
  c.fn_ = std::make_shared<const std::function<double(double)>>(std::move(fn));
  return c;
}

double MetcCurve::operator()(double q) const {
  switch (kind_) {
    case Kind::kConstant:
      return a_;
    case Kind::kLinear:
      return a_ + b_ * q;
    case Kind::kSampled: {
      auto it = std::upper_bound(q_.begin(), q_.end(), q);
      std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - q_.begin()), 1, q_.size() - 1);
      std::size_t lo = hi - 1;
      double w = (q - q_[lo]) / (q_[hi] - q_[lo]);
      return v_[lo] + w * (v_[hi] - v_[lo]);
    }
    case Kind::kFunction:
      return (*fn_)(q);
  }
  return 0.0;
}

double MetcCurve::integral(double a, double b) const {
  if (a == b) return 0.0;
  if (b < a) return -integral(b, a);
  switch (kind_) {
    case Kind::kConstant:
      return a_ * (b - a);
    case Kind::kLinear:
      return a_ * (b - a) + 0.5 * b_ * (b * b - a * a);
    case Kind::kSampled: {
      // Exact on each linear piece, including the extrapolated ends.
      std::vector<double> knots{a};
      for (double q : q_) {
        if (q > a && q < b) knots.push_back(q);
      }
      knots.push_back(b);
      double sum = 0.0;
      for (std::size_t i = 1; i < knots.size(); ++i) {
        sum += 0.5 * ((*this)(knots[i - 1]) + (*this)(knots[i])) * (knots[i] - knots[i - 1]);
      }
      return sum;
    }
    case Kind::kFunction: {
      auto f = [this](double q) { return (*fn_)(q); };
      return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 15, 1e-12);
    }
  }
  return 0.0;
}

double MetcCurve::quantity_at(double level, double cap) const {
  if (!(cap > 0.0)) return 0.0;
  if ((*this)(0.0) > level) return 0.0;
  if ((*this)(cap) <= level) return cap;
  return bracketed_root([&](double q) { return level - (*this)(q); }, 0.0, cap);
}

double trade_gain(const MarketPosition& agent1, const MarketPosition& agent2, double agent1_export) {
  if (agent1_export >= 0.0) {
    double x = agent1_export;
    return agent2.curve.integral(agent2.autarky_quantity - x, agent2.autarky_quantity) -
           agent1.curve.integral(agent1.autarky_quantity, agent1.autarky_quantity + x);
  }
  double y = -agent1_export;
  return agent1.curve.integral(agent1.autarky_quantity - y, agent1.autarky_quantity) -
         agent2.curve.integral(agent2.autarky_quantity, agent2.autarky_quantity + y);
}

double gains_from_trade(const BilateralMarket& m, double q_b, double q_c, double transaction_cost) {
  check_quantity(q_b, "gains_from_trade: q_b");
  check_quantity(q_c, "gains_from_trade: q_c");
  return trade_gain(m.b[0], m.b[1], q_b) + trade_gain(m.c[1], m.c[0], q_c) - transaction_cost;
}

namespace {

GoodTrade settle(const std::array<MarketPosition, 2>& pos, double mtc, double& gain) {
  GoodTrade g;
  g.good = pos[0].curve.good();
  for (int a = 0; a < 2; ++a) {
    check_quantity(pos[static_cast<std::size_t>(a)].autarky_quantity, "optimal_bilateral_trade: autarky quantity");
    g.autarky_transfer[static_cast<std::size_t>(a)] = pos[static_cast<std::size_t>(a)].autarky_transfer();
  }
  g.post_transfer = g.autarky_transfer;
  gain = 0.0;
  const double diff = g.autarky_transfer[1] - g.autarky_transfer[0];
  const double tol = 1e-12 * std::max({1.0, std::abs(g.autarky_transfer[0]), std::abs(g.autarky_transfer[1])});
  if (std::abs(diff) <= mtc + tol) return g;

  const std::size_t e = diff > 0.0 ? 0 : 1;
  const std::size_t i = 1 - e;
  const MarketPosition& exp = pos[e];
  const MarketPosition& imp = pos[i];
  auto h = [&](double x) {
    return imp.curve(imp.autarky_quantity - x) - exp.curve(exp.autarky_quantity + x) - mtc;
  };
  const double cap = imp.autarky_quantity;
  double x = 0.0;
  if (cap > 0.0) x = h(cap) >= 0.0 ? cap : bracketed_root(h, 0.0, cap);
  if (!(x > 0.0)) return g;

  g.exporter = static_cast<int>(e);
  g.quantity = x;
  g.post_transfer[e] = exp.curve(exp.autarky_quantity + x);
  g.post_transfer[i] = imp.curve(imp.autarky_quantity - x);
  gain = trade_gain(exp, imp, x);
  return g;
}

}  // namespace

TradeOutcome optimal_bilateral_trade(const BilateralMarket& m, std::array<double, 2> mtc) {
  for (double v : mtc) check_quantity(v, "optimal_bilateral_trade: marginal transaction cost");
  TradeOutcome out;
  out.marginal_transaction_cost = mtc;
  double gain_b = 0.0, gain_c = 0.0;
  out.b = settle(m.b, mtc[0], gain_b);
  out.c = settle(m.c, mtc[1], gain_c);
  out.transaction_cost = mtc[0] * out.b.quantity + mtc[1] * out.c.quantity;
  out.gains = gain_b + gain_c - out.transaction_cost;

  for (std::size_t a = 0; a < 2; ++a) out.reservation[a] = out.c.autarky_transfer[a] / out.b.autarky_transfer[a];
  // Price at the exporters' (producers') transfers; with MTC = 0 both agents agree.
  auto producer_side = [](const GoodTrade& g) {
    return g.exporter >= 0 ? g.post_transfer[static_cast<std::size_t>(g.exporter)] : g.post_transfer[0];
  };
  out.commodity_price = producer_side(out.c) / producer_side(out.b);
  double lo = std::min(out.reservation[0], out.reservation[1]);
  double hi = std::max(out.reservation[0], out.reservation[1]);
  double slack = 1e-9 * std::max(1.0, std::abs(hi));
  out.within_reservation = out.commodity_price >= lo - slack && out.commodity_price <= hi + slack;
  if (out.b.exporter < 0 && out.c.exporter < 0) out.status = Status::kNoGainsFromTrade;
  return out;
}

namespace {

double demand_at(const MarketPosition& p, double level) {
  return p.demand_scale > 0.0 ? p.demand_scale / level : p.autarky_quantity;
}

GoodMarketResult clear_market(const std::vector<const MarketPosition*>& pos, const TatonnementOptions& opt) {
  const std::size_t n = pos.size();
  GoodMarketResult r;
  r.good = pos.front()->curve.good();
  r.production.assign(n, 0.0);
  r.consumption.assign(n, 0.0);
  r.net_exports.assign(n, 0.0);
  r.post_transfer.assign(n, 0.0);

  auto excess = [&](double level, bool fill) {
    double demand = 0.0;
    for (const auto* p : pos) demand += demand_at(*p, level);
    double supply = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double q = pos[i]->curve.quantity_at(level, demand);
      supply += q;
      if (fill) {
        r.production[i] = q;
        r.consumption[i] = demand_at(*pos[i], level);
        r.post_transfer[i] = pos[i]->curve(q);
      }
    }
    return demand - supply;
  };

  // Start from the quantity-weighted autarky transfers.
  double num = 0.0, den = 0.0;
  for (const auto* p : pos) {
    num += p->autarky_quantity * p->autarky_transfer();
    den += p->autarky_quantity;
  }
  double level = den > 0.0 ? num / den : pos.front()->autarky_transfer();
  if (!(level > 0.0)) {
    throw Error(ErrorCode::kDomainError, "tatonnement: marginal transfers must be positive for " + r.good);
  }
  // Every agent already faces the same transfer: autarky clears the market
  // and nobody trades. Settled here so that no inversion noise leaks in.
  bool settled = true;
  for (const auto* p : pos) {
    settled = settled && std::abs(p->autarky_transfer() - level) <= 1e-12 * std::max(1.0, level);
  }
  if (settled) {
    for (std::size_t i = 0; i < n; ++i) {
      r.production[i] = r.consumption[i] = pos[i]->autarky_quantity;
      r.post_transfer[i] = pos[i]->autarky_transfer();
    }
    r.level = level;
    r.status = Status::kOk;
    return r;
  }
  double log_lo = -numerics::kInf, log_hi = numerics::kInf;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    double z = excess(level, true);
    double scale = 0.0;
    for (double c : r.consumption) scale += c;
    r.iterations = it;
    r.level = level;
    r.excess_demand = z;
    if (std::abs(z) <= opt.tolerance * std::max(1.0, scale)) {
      // Producers capped at total demand clear the market over a range of
      // levels; report the lowest, where the marginal producer sits.
      double marginal = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (r.production[i] > 0.0) marginal = std::max(marginal, r.post_transfer[i]);
      }
      if (marginal > 0.0 && marginal < level) r.level = marginal;
    }
    r.spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (r.production[i] > 0.0) r.spread = std::max(r.spread, std::abs(r.post_transfer[i] - r.level));
    }
    if (std::abs(z) <= opt.tolerance * std::max(1.0, scale) && r.spread <= opt.tolerance * std::max(1.0, level)) {
      // The leftover excess (within tolerance) goes to producers in
      // proportion to output so the books balance exactly.
      double produced = 0.0;
      for (double q : r.production) produced += q;
      if (produced > 0.0 && z != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          r.production[i] += z * r.production[i] / produced;
          r.post_transfer[i] = pos[i]->curve(r.production[i]);
        }
      }
      r.status = Status::kOk;
      break;
    }
    if (it == opt.max_iterations) break;
    double x = std::log(level);
    if (z > 0.0) log_lo = std::max(log_lo, x);
    if (z < 0.0) log_hi = std::min(log_hi, x);
    const double h = 1e-6;
    double slope = (excess(std::exp(x + h), false) - excess(std::exp(x - h), false)) / (2.0 * h);
    double next = slope < 0.0 ? x - opt.damping * z / slope : x + (z > 0.0 ? 0.5 : -0.5);
    if (std::isfinite(log_lo) && std::isfinite(log_hi) && !(next > log_lo && next < log_hi)) {
      next = 0.5 * (log_lo + log_hi);
    }
    level = std::exp(next);
  }
  for (std::size_t i = 0; i < n; ++i) r.net_exports[i] = r.production[i] - r.consumption[i];
  return r;
}

}  // namespace

TatonnementResult multi_agent_tatonnement(const std::vector<std::vector<MarketPosition>>& agents,
                                          const TatonnementOptions& options) {
  if (agents.size() < 2) throw Error(ErrorCode::kInvalidArgument, "tatonnement: at least two agents are required");
  const std::size_t G = agents.front().size();
  for (const auto& a : agents) {
    if (a.size() != G) throw Error(ErrorCode::kInvalidArgument, "tatonnement: agents list different goods");
    for (std::size_t g = 0; g < G; ++g) {
      if (a[g].curve.good() != agents.front()[g].curve.good()) {
        throw Error(ErrorCode::kInvalidArgument, "tatonnement: goods are not aligned across agents");
      }
      check_quantity(a[g].autarky_quantity, "tatonnement: autarky quantity");
    }
  }
  TatonnementResult res;
  res.energy_released.assign(agents.size(), 0.0);
  res.status = Status::kOk;
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<const MarketPosition*> pos;
    for (const auto& a : agents) pos.push_back(&a[g]);
    GoodMarketResult r = clear_market(pos, options);
    if (r.status != Status::kOk) res.status = Status::kNoConvergence;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      res.energy_released[i] += pos[i]->curve.integral(r.production[i], pos[i]->autarky_quantity);
    }
    res.goods.push_back(std::move(r));
  }
  const auto n = static_cast<Eigen::Index>(G);
  res.commodity_prices = Matrix::Ones(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      res.commodity_prices(a, b) = res.goods[static_cast<std::size_t>(b)].level / res.goods[static_cast<std::size_t>(a)].level;
    }
  }
  return res;
}

MetcCurve sample_metc(const AutarkyEquilibrium& agent, const std::string& good, int period,
                      const MetcSampling& sampling) {
  const ProducerProblem& full = agent.producer_problem;
  auto it = std::find(full.good_ids.begin(), full.good_ids.end(), good);
  if (it == full.good_ids.end()) throw Error(ErrorCode::kInvalidArgument, "sample_metc: unknown good " + good);
  const auto k = static_cast<Eigen::Index>(it - full.good_ids.begin());
  if (period < 0 || period >= full.horizon()) throw Error(ErrorCode::kInvalidArgument, "sample_metc: period out of range");
  const double base = full.targets(k, period);
  if (!(base > 0.0)) {
    throw Error(ErrorCode::kNonFiniteMarginal, "sample_metc: " + good + " is not produced in that period");
  }
  if (sampling.points < 2 || !(sampling.lower > 0.0) || !(sampling.upper > sampling.lower)) {
    throw Error(ErrorCode::kInvalidArgument, "sample_metc: need >= 2 points and 0 < lower < upper");
  }

  ProducerProblem one = full;
  one.targets = full.targets.col(period);
  one.endowments = full.endowments.col(period);
  one.lambda.clear();
  if (!full.lambda.empty()) one.lambda.push_back(full.lambda[static_cast<std::size_t>(period)]);

  std::vector<double> qs, taus;
  for (int j = 0; j < sampling.points; ++j) {
    double frac = sampling.lower + (sampling.upper - sampling.lower) * j / (sampling.points - 1);
    one.targets(k, 0) = base * frac;
    try {
      ProducerSolution s = solve_transfer_min(one);
      qs.push_back(base * frac);
      taus.push_back(s.tau(k, 0));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
    }
  }
  if (qs.size() < 2) throw Error(ErrorCode::kInfeasible, "sample_metc: fewer than two feasible sample points for " + good);
  // Convexity makes the curve non-decreasing; remove solver noise.
  for (std::size_t j = 1; j < taus.size(); ++j) taus[j] = std::max(taus[j], taus[j - 1]);
  return MetcCurve::sampled(good, std::move(qs), std::move(taus));
}

std::vector<MetcCurve> sample_metcs(const std::vector<const AutarkyEquilibrium*>& agents, const std::string& good,
                                    int period, const MetcSampling& sampling) {
  std::vector<MetcCurve> out;
  out.reserve(agents.size());
  const std::size_t workers = std::max<std::size_t>(1, numerics::worker_count());
  for (std::size_t start = 0; start < agents.size(); start += workers) {
    std::vector<std::future<MetcCurve>> batch;
    for (std::size_t i = start; i < std::min(agents.size(), start + workers); ++i) {
      batch.push_back(std::async(std::launch::async, [&, i] { return sample_metc(*agents[i], good, period, sampling); }));
    }
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace energyecon
