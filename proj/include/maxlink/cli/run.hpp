#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#include "maxlink/actuarial/life_table.hpp"
#include "maxlink/error.hpp"
#include "maxlink/hedging/hedging.hpp"
#include "maxlink/io/json.hpp"
#include "maxlink/mc/engine.hpp"
#include "maxlink/mc/products.hpp"
#include "maxlink/pricing/premium.hpp"

namespace maxlink::cli {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string command;
  std::string model_path;
  std::string table_path;
  std::string product_path;
  std::string out_path;
  std::string dump_path;
  std::uint64_t seed = 20240601;
  std::size_t n_paths = 100000;
  double mvn_tol = 1e-6;
  int horizon = 0;  // simulate only; 0 means the product horizon
  unsigned threads = 1;
  bool raw_guarantee_leg = false;
  bool discounted_ledger = false;
  bool antithetic = false;
};

inline std::string usage() {
  return "usage: maxlink <price|hedge|simulate|validate> --model FILE [--table FILE] [--product FILE]\n"
         "       [--seed N] [--paths N] [--mvn-tol X] [--threads N] [--horizon N]\n"
         "       [--raw-guarantee-leg] [--discounted-ledger] [--antithetic]\n"
         "       [--out FILE] [--dump FILE]\n";
}

namespace detail {

using io::Json;

inline Json header(const RunConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = c.command;
  j["mvn_tol"] = c.mvn_tol;
  return j;
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(Errc::InvalidSpec, std::string("missing required option ") + flag);
}

inline void check_config(const RunConfig& c) {
  if (!(c.mvn_tol > 0.0 && c.mvn_tol <= 1e-2)) {
    throw Error(Errc::InvalidSpec, "--mvn-tol must lie in (0, 1e-2]");
  }
  if (c.n_paths == 0) throw Error(Errc::InvalidSpec, "--paths must be positive");
  if (c.threads == 0) throw Error(Errc::InvalidSpec, "--threads must be positive");
}

inline PricingOptions pricing_options(const RunConfig& c) {
  PricingOptions o;
  o.mvn_tol = c.mvn_tol;
  o.raw_guarantee_leg = c.raw_guarantee_leg;
  return o;
}

inline MarketState prefix(const MarketState& st, int s) {
  MarketState out;
  out.t = s;
  out.y.assign(st.y.begin(), st.y.begin() + s);
  if (st.regimes_known()) out.regimes.assign(st.regimes.begin(), st.regimes.begin() + s);
  return out;
}

inline Json run_price(const RunConfig& c) {
  require(c.model_path, "--model");
  require(c.table_path, "--table");
  require(c.product_path, "--product");
  const auto model = io::load_model(c.model_path);
  const auto table = load_life_table(c.table_path);
  const auto pf = io::load_product(c.product_path, model.n_x());
  check_state(model, pf.state);
  const auto opt = pricing_options(c);
  const auto prem = premium_suite(pf.base, model, pf.state, table, pf.tilt, opt, pf.kinds);

  std::map<int, std::pair<MaxClaim, LegRequest>> legs;
  for (int k = pf.base.t + 1; k <= pf.base.T; ++k) {
    LegRequest r;
    r.call = pf.base.claim(k).guarantee > 0.0;
    r.put = r.forward = r.zcb = true;
    legs[k] = {pf.base.claim(k), r};
  }
  const auto sweep = price_maturities(model, pf.state, legs, opt);

  Json rep = header(c);
  std::size_t paths = sweep.path_count;
  double trunc = sweep.truncation_bound;
  for (const auto& [_, r] : prem) {
    paths = std::max(paths, r.path_count);
    trunc = std::max(trunc, r.truncation_bound);
  }
  rep["path_count"] = paths;
  rep["truncation_bound"] = trunc;
  rep["t"] = pf.base.t;
  rep["horizon"] = pf.base.T;
  rep["age"] = pf.base.x;
  rep["raw_guarantee_leg"] = c.raw_guarantee_leg;
  Json products = Json::array();
  for (auto k : pf.kinds) {
    Json p = io::to_json(prem.at(k));
    p["kind"] = to_string(k);
    products.push_back(p);
  }
  rep["products"] = products;
  Json options = Json::array();
  for (const auto& [k, v] : sweep.values) {
    Json o;
    o["maturity"] = k;
    o["guarantee"] = pf.base.claim(k).guarantee;
    if (pf.base.claim(k).guarantee > 0.0) {
      o["call"] = std::max(v.call, 0.0);
    } else {
      o["call"] = nullptr;
    }
    o["put"] = std::max(v.put, 0.0);
    o["forward_max"] = v.forward;
    o["zcb"] = v.zcb;
    options.push_back(o);
  }
  rep["options"] = options;
  return rep;
}

inline Json run_hedge(const RunConfig& c) {
  require(c.model_path, "--model");
  require(c.table_path, "--table");
  require(c.product_path, "--product");
  const auto model = io::load_model(c.model_path);
  const auto table = load_life_table(c.table_path);
  const auto pf = io::load_product(c.product_path, model.n_x());
  check_state(model, pf.state);
  const auto opt = pricing_options(c);
  Json rep = header(c);
  rep["discounted_ledger"] = c.discounted_ledger;
  rep["cash_convention"] = c.discounted_ledger ? "h0 = D_t V_t - h'(D_t x_t)" : "h0 = V_t - h'x_t";
  Json steps = Json::array();
  std::size_t paths = 0;
  for (int s = 0; s <= pf.base.t; ++s) {
    const MarketState st = prefix(pf.state, s);
    for (auto kind : pf.kinds) {
      ProductSpec p = pf.base;
      p.kind = kind;
      p.t = s;
      const auto h = hedge(p, model, st, table, pf.tilt, opt, c.discounted_ledger);
      paths += static_cast<std::size_t>(std::pow(model.regimes(), p.T - s));
      Json e;
      e["t"] = s;
      e["kind"] = to_string(kind);
      e["h"] = io::from_vector(h.position.h);
      e["h0"] = h.position.h0;
      e["V"] = h.position.V;
      e["premium"] = h.premium;
      e["singular_omega"] = h.position.singular_omega;
      e["omega"] = io::from_matrix(h.omega);
      e["lambda"] = io::from_vector(h.lambda);
      steps.push_back(e);
    }
  }
  rep["path_count"] = paths;
  rep["truncation_bound"] = 0.0;
  rep["steps"] = steps;
  return rep;
}

inline Json estimate_json(const McEstimate& e) {
  Json j;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  return j;
}

inline Json run_simulate(const RunConfig& c) {
  require(c.model_path, "--model");
  const auto model = io::load_model(c.model_path);
  std::optional<io::ProductFile> pf;
  if (!c.product_path.empty()) pf = io::load_product(c.product_path, model.n_x());
  Ensemble ens;
  ens.model = &model;
  if (pf) ens.state = pf->state;
  const int horizon = c.horizon > 0 ? c.horizon : (pf ? pf->base.T : 1);
  ens.end = horizon;
  ens.n_paths = c.n_paths;
  ens.seed = c.seed;
  ens.threads = c.threads;
  ens.antithetic = c.antithetic;
  if (ens.end <= ens.state.t) throw Error(Errc::InvalidSpec, "simulation horizon must exceed t");

  const int nx = model.n_x();
  std::vector<Payoff> payoffs;
  for (int m = ens.state.t + 1; m <= ens.end; ++m) {
    payoffs.push_back([m](const PathView& v) { return v.discount(m); });
    for (int i = 0; i < nx; ++i) {
      payoffs.push_back([m, i](const PathView& v) { return v.discounted_price(i, m); });
    }
  }
  std::vector<ProductSpec> products;
  std::optional<LifeTable> table;
  if (pf && !c.table_path.empty()) {
    table = load_life_table(c.table_path);
    for (auto k : pf->kinds) {
      ProductSpec p = pf->base;
      p.kind = k;
      if (p.T <= ens.end) {
        products.push_back(p);
        payoffs.push_back(product_payoff(p, remaining_mortality(p, *table, pf->tilt),
                                         c.raw_guarantee_leg));
      }
    }
  }
  const auto est = mc_price_many(ens, payoffs);

  Json rep = header(c);
  rep["path_count"] = 0;
  rep["truncation_bound"] = 0.0;
  rep["n_paths"] = ens.n_paths;
  rep["seed"] = ens.seed;
  rep["antithetic"] = ens.antithetic;
  rep["t"] = ens.state.t;
  rep["horizon"] = ens.end;
  Json steps = Json::array();
  std::size_t idx = 0;
  for (int m = ens.state.t + 1; m <= ens.end; ++m) {
    Json s;
    s["step"] = m;
    s["discount"] = estimate_json(est[idx++]);
    Json prices = Json::array();
    for (int i = 0; i < nx; ++i) prices.push_back(estimate_json(est[idx++]));
    s["discounted_prices"] = prices;
    steps.push_back(s);
  }
  rep["steps"] = steps;
  if (!products.empty()) {
    Json prem = Json::array();
    for (const auto& p : products) {
      Json e = estimate_json(est[idx++]);
      e["kind"] = to_string(p.kind);
      prem.push_back(e);
    }
    rep["premiums"] = prem;
  }
  if (!c.dump_path.empty()) {
    std::ofstream dump(c.dump_path);
    if (!dump) throw Error(Errc::InvalidSpec, "cannot write " + c.dump_path);
    dump_ensemble_csv(ens, dump, ens.n_paths);
    rep["dump"] = c.dump_path;
  }
  return rep;
}

inline Json run_validate(const RunConfig& c) {
  require(c.model_path, "--model");
  const auto model = io::load_model(c.model_path);
  Json rep = header(c);
  rep["path_count"] = 0;
  rep["truncation_bound"] = 0.0;
  Json m;
  m["n"] = model.n();
  m["n_z"] = model.n_z();
  m["n_x"] = model.n_x();
  m["regimes"] = model.regimes();
  m["lag_order"] = model.spec().p;
  m["covariance"] = model.is_garch() ? "vech_garch" : "constant";
  m["regularized"] = model.regularized();
  rep["model"] = m;
  if (!c.table_path.empty()) {
    const auto table = load_life_table(c.table_path);
    Json t;
    t["min_age"] = table.min_age();
    t["max_age"] = table.max_age();
    rep["table"] = t;
  }
  if (!c.product_path.empty()) {
    const auto pf = io::load_product(c.product_path, model.n_x());
    check_state(model, pf.state);
    Json p;
    p["age"] = pf.base.x;
    p["t"] = pf.base.t;
    p["horizon"] = pf.base.T;
    Json kinds = Json::array();
    for (auto k : pf.kinds) kinds.push_back(to_string(k));
    p["kinds"] = kinds;
    rep["product"] = p;
  }
  rep["valid"] = true;
  return rep;
}

}  // namespace detail

/// Runs one command. Exit 0 on success, 2 on invalid input, 1 on runtime failure.
inline int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  io::Json rep;
  try {
    detail::check_config(config);
    if (config.command == "price") {
      rep = detail::run_price(config);
    } else if (config.command == "hedge") {
      rep = detail::run_hedge(config);
    } else if (config.command == "simulate") {
      rep = detail::run_simulate(config);
    } else if (config.command == "validate") {
      rep = detail::run_validate(config);
    } else {
      err << "unknown command '" << config.command << "'\n" << usage();
      return 1;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  const std::string text = rep.dump(2) + "\n";
  if (config.out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(config.out_path, std::ios::binary);
    if (!f) {
      err << "error: cannot write " << config.out_path << '\n';
      return 1;
    }
    f << text;
  }
  return 0;
}

}  // namespace maxlink::cli
