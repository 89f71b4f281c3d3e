// SPDX-License-Identifier: Apache-2.0
#include "simharness/records.hpp"

#include <cmath>

#include "simharness/csv.hpp"
#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"

namespace simharness {

namespace {
constexpr const char* kEstimatesHeader =
    "dgm_id,repetition,method_id,estimand_id,theta_hat,se_hat,df,ci_low,ci_high,"
    "p_value,converged,error_code";
}

std::string estimates_to_csv(const EstimatesData& data) {
  std::string out = kEstimatesHeader;
  out += '\n';
  for (const auto& r : data.rows) {
    const auto& e = r.estimate;
    out += r.dgm_id;
    out += ',';
    out += std::to_string(r.repetition);
    out += ',';
    out += r.method_id;
    out += ',';
    out += r.estimand_id;
    out += ',';
    out += mathutil::fmt_g17(e.theta_hat);
    out += ',';
    out += mathutil::fmt_g17(e.se_hat);
    out += ',';
    out += mathutil::fmt_g17(e.df);
    out += ',';
    out += mathutil::fmt_g17(e.ci_low);
    out += ',';
    out += mathutil::fmt_g17(e.ci_high);
    out += ',';
    out += mathutil::fmt_g17(e.p_value);
    out += ',';
    out += e.converged ? "1" : "0";
    out += ',';
    out += estimators::fit_error_name(e.error_code);
    out += '\n';
  }
  return out;
}

EstimatesData estimates_from_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const int c_dgm = t.column("dgm_id");
  const int c_rep = t.column("repetition");
  const int c_method = t.column("method_id");
  const int c_estimand = t.column("estimand_id");
  const int c_theta = t.column("theta_hat");
  const int c_se = t.column("se_hat");
  const int c_df = t.column("df");
  const int c_lo = t.column("ci_low");
  const int c_hi = t.column("ci_high");
  const int c_p = t.column("p_value");
  const int c_conv = t.column("converged");
  const int c_err = t.column("error_code");
  if (c_dgm < 0 || c_rep < 0 || c_method < 0 || c_theta < 0)
    throw Error(ErrorCode::config_error,
                "estimates file must have at least dgm_id, repetition, method_id "
                "and theta_hat columns");

  EstimatesData data;
  data.has_se = c_se >= 0;
  data.has_ci = c_lo >= 0 && c_hi >= 0;
  data.has_p = c_p >= 0;
  data.has_df = c_df >= 0;
  data.rows.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw Error(ErrorCode::config_error, "estimates file has a malformed row");
    EstimatesRecord r;
    r.dgm_id = row[c_dgm];
    r.repetition = std::strtoull(row[c_rep].c_str(), nullptr, 10);
    r.method_id = row[c_method];
    r.estimand_id = c_estimand >= 0 ? row[c_estimand] : "estimand";
    auto& e = r.estimate;
    e.theta_hat = csv::parse_double(row[c_theta]);
    e.se_hat = c_se >= 0 ? csv::parse_double(row[c_se]) : std::nan("");
    e.df = c_df >= 0 ? csv::parse_double(row[c_df])
                     : std::numeric_limits<double>::infinity();
    e.ci_low = c_lo >= 0 ? csv::parse_double(row[c_lo]) : std::nan("");
    e.ci_high = c_hi >= 0 ? csv::parse_double(row[c_hi]) : std::nan("");
    e.p_value = c_p >= 0 ? csv::parse_double(row[c_p]) : std::nan("");
    // Foreign files may omit convergence; a present estimate counts as converged.
    e.converged = c_conv >= 0 ? row[c_conv] == "1" || row[c_conv] == "true"
                              : std::isfinite(e.theta_hat);
    e.error_code = c_err >= 0 ? estimators::fit_error_from_name(row[c_err])
                              : estimators::FitErrorCode::none;
    data.rows.push_back(std::move(r));
  }
  return data;
}

std::string states_to_csv(const StatesData& data) {
  std::string out = "dgm_id,repetition,state_hex\n";
  for (const auto& r : data.rows) {
    out += r.dgm_id;
    out += ',';
    out += std::to_string(r.repetition);
    out += ',';
    out += r.state_hex;
    out += '\n';
  }
  return out;
}

StatesData states_from_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const int c_dgm = t.column("dgm_id");
  const int c_rep = t.column("repetition");
  const int c_hex = t.column("state_hex");
  if (c_dgm < 0 || c_rep < 0 || c_hex < 0)
    throw Error(ErrorCode::config_error,
                "states file must have dgm_id, repetition and state_hex columns");
  StatesData data;
  data.rows.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw Error(ErrorCode::config_error, "states file has a malformed row");
    data.rows.push_back({row[c_dgm],
                         std::strtoull(row[c_rep].c_str(), nullptr, 10),
                         row[c_hex]});
  }
  return data;
}

}  // namespace simharness
