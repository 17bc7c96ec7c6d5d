#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxlink/actuarial/life_table.hpp"
#include "maxlink/error.hpp"
#include "maxlink/msvar/model.hpp"
#include "maxlink/msvar/stacked.hpp"
#include "maxlink/pricing/premium.hpp"

namespace maxlink::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline Matrix to_matrix(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw Error(Errc::ParseError, what + " must be a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(Errc::DimensionMismatch, what + " has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Vector to_vector(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(Errc::ParseError, what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline std::vector<Matrix> to_matrices(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(Errc::ParseError, what + " must be an array of matrices");
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(to_matrix(m, what));
  return out;
}

inline Json from_vector(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json from_matrix(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(from_vector(m.row(r).transpose()));
  return a;
}

template <class F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::ParseError, what + ": " + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  return guarded(path, [&] { return Json::parse(in); });
}

}  // namespace detail

/// Model document: matrices are row-major arrays of rows.
inline ModelSpec parse_model(const Json& j) {
  return detail::guarded("model", [&] {
    ModelSpec s;
    s.n_z = j.at("n_z").get<int>();
    s.n_x = j.at("n_x").get<int>();
    s.p = j.at("lags").get<int>();
    s.regimes = j.at("regimes").get<int>();
    s.k = j.value("exog_dim", 1);
    for (const auto& c : j.at("coefficients")) {
      RegimeCoefficients rc;
      rc.a0 = detail::to_matrix(c.at("A0"), "A0");
      if (c.contains("lags")) rc.lags = detail::to_matrices(c.at("lags"), "lag matrix");
      s.coefficients.push_back(std::move(rc));
    }
    s.transition = detail::to_matrix(j.at("transition"), "transition");
    s.initial_dist = detail::to_vector(j.at("initial_dist"), "initial_dist");
    const auto& cov = j.at("covariance");
    const std::string type = cov.at("type").get<std::string>();
    if (type == "constant") {
      s.covariance = ConstantCovariance{detail::to_matrices(cov.at("sigma"), "sigma")};
    } else if (type == "vech_garch") {
      VechGarchCovariance g;
      for (const auto& b0 : cov.at("b0")) g.b0.push_back(detail::to_vector(b0, "b0"));
      for (const auto& bs : cov.at("b")) g.b.push_back(detail::to_matrices(bs, "GARCH B"));
      g.presample = detail::to_matrices(cov.at("presample"), "presample covariance");
      s.covariance = std::move(g);
    } else {
      throw Error(Errc::ParseError, "unknown covariance type '" + type + "'");
    }
    for (const auto& y : j.at("presample_y")) s.presample_y.push_back(detail::to_vector(y, "presample_y"));
    if (j.contains("exog")) {
      for (const auto& e : j.at("exog")) s.exog.push_back(detail::to_vector(e, "exog"));
    }
    return s;
  });
}

inline ValidatedModel load_model(const std::string& path) {
  return validate_spec(parse_model(detail::read_json_file(path)));
}

/// Product document plus the market information observed at the valuation step.
struct ProductFile {
  ProductSpec base;
  std::vector<ProductKind> kinds;
  MortalityTilt tilt;
  MarketState state;
};

inline ProductFile parse_product(const Json& j, int n_x) {
  return detail::guarded("product", [&] {
    ProductFile f;
    const std::string kind = j.value("kind", std::string("all"));
    if (kind == "all") {
      f.kinds.assign(kAllProducts.begin(), kAllProducts.end());
    } else {
      f.kinds.push_back(product_kind_from_string(kind));
    }
    f.base.kind = f.kinds.front();
    f.base.x = j.at("age").get<int>();
    f.base.t = j.value("t", 0);
    f.base.T = j.at("horizon").get<int>();
    f.base.alive = j.value("alive", true);
    const auto& g = j.at("guarantees");
    if (static_cast<int>(g.size()) != f.base.T) {
      throw Error(Errc::DimensionMismatch, "guarantees must have one entry per step 1..T");
    }
    const auto& w = j.at("weights");
    const bool per_step = !w.empty() && w.front().is_array();
    if (per_step && static_cast<int>(w.size()) != f.base.T) {
      throw Error(Errc::DimensionMismatch, "weights must have one row per step 1..T");
    }
    for (int k = 1; k <= f.base.T; ++k) {
      MaxClaim c;
      c.k = k;
      c.guarantee = g[static_cast<std::size_t>(k - 1)].get<double>();
      c.weights = detail::to_vector(per_step ? w[static_cast<std::size_t>(k - 1)] : w, "weights");
      check_claim(c, n_x);
      f.base.claims.push_back(std::move(c));
    }
    if (j.contains("tilt")) {
      for (const auto& v : j.at("tilt")) f.tilt.g.push_back(v.get<double>());
    }
    f.state.t = f.base.t;
    if (j.contains("observed")) {
      for (const auto& y : j.at("observed")) f.state.y.push_back(detail::to_vector(y, "observed"));
    }
    if (j.contains("regimes")) {
      for (const auto& s : j.at("regimes")) f.state.regimes.push_back(s.get<int>());
    }
    check_product(f.base, n_x);
    return f;
  });
}

inline ProductFile load_product(const std::string& path, int n_x) {
  return parse_product(detail::read_json_file(path), n_x);
}

inline Json to_json(const PriceResult& r) {
  Json j;
  j["value"] = r.value;
  j["path_count"] = r.path_count;
  j["truncation_bound"] = r.truncation_bound;
  j["mvn_tol"] = r.mvn_tol;
  j["mvn_error"] = r.mvn_error;
  j["regularized"] = r.regularized;
  return j;
}

using detail::from_matrix;
using detail::from_vector;

}  // namespace maxlink::io
