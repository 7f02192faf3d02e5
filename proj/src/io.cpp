#include "mflq/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mflq/errors.hpp"

namespace mflq {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(Errc::Schema, where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw Error(Errc::Schema, "unknown key '" + key + "' in " + where);
}

double number(const json& j, const std::string& name) {
  if (!j.is_number()) throw Error(Errc::Schema, name + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(Errc::NonFinite, name);
  return v;
}

int integer(const json& obj, const char* key) {
  if (!obj.contains(key)) throw Error(Errc::Schema, std::string("missing \"") + key + "\"");
  const json& j = obj.at(key);
  if (!j.is_number_integer()) throw Error(Errc::Schema, std::string(key) + " must be an integer");
  return j.get<int>();
}

Vec vec_from_json(const json& j, const std::string& name) {
  if (j.is_number()) return Vec::Constant(1, number(j, name));
  if (!j.is_array()) throw Error(Errc::Schema, name + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], name);
  return v;
}

Mat optional_mat(const json& obj, const char* key) {
  return obj.contains(key) ? mat_from_json(obj.at(key), key) : Mat();
}

const std::set<std::string> kDynamicsKeys = {"A",  "A_bar",  "C",  "C_bar",  "B1", "B1_bar",
                                             "D1", "D1_bar", "B2", "B2_bar", "D2", "D2_bar"};
const std::set<std::string> kPlayerKeys = {"Q",   "Q_bar",   "S1",  "S1_bar",  "S2",  "S2_bar",
                                           "R11", "R11_bar", "R12", "R12_bar", "R22", "R22_bar"};
const std::set<std::string> kOptionKeys = {"are_tol", "ode_tol", "eps_min", "eps_chain_tol", "damping",
                                           "max_iter"};

SolveOptions options_from_json(const json& j) {
  only_keys(j, kOptionKeys, "options");
  SolveOptions o;
  if (j.contains("are_tol")) o.are_tol = number(j["are_tol"], "are_tol");
  if (j.contains("ode_tol")) o.ode_tol = number(j["ode_tol"], "ode_tol");
  if (j.contains("eps_min")) o.eps_min = number(j["eps_min"], "eps_min");
  if (j.contains("eps_chain_tol")) o.eps_chain_tol = number(j["eps_chain_tol"], "eps_chain_tol");
  if (j.contains("damping")) o.damping = number(j["damping"], "damping");
  if (j.contains("max_iter")) o.max_iter = integer(j, "max_iter");
  if (!(o.are_tol > 0) || !(o.ode_tol > 0) || !(o.eps_min > 0) || !(o.eps_chain_tol > 0) ||
      !(o.damping > 0 && o.damping <= 1) || o.max_iter < 1)
    throw Error(Errc::Schema, "options out of range");
  return o;
}

json options_to_json(const SolveOptions& o) {
  return {{"are_tol", o.are_tol}, {"ode_tol", o.ode_tol},   {"eps_min", o.eps_min},
          {"eps_chain_tol", o.eps_chain_tol}, {"damping", o.damping}, {"max_iter", o.max_iter}};
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json residuals_to_json(const ResidualMap& r) {
  json o = json::object();
  for (const auto& [k, v] : r) o[k] = v;
  return o;
}

// Non-finite diagnostics are written as null.
double diagnostic(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!obj[key].is_number()) throw Error(Errc::Schema, std::string(key) + " must be a number");
  return obj[key].get<double>();
}

ResidualMap residuals_from_json(const json& j, const std::string& name) {
  if (!j.is_object()) throw Error(Errc::Schema, name + " must be an object");
  ResidualMap r;
  for (const auto& [k, v] : j.items()) r[k] = diagnostic(j, k.c_str());
  return r;
}

}  // namespace

json mat_to_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json& j, const std::string& name) {
  if (j.is_number()) return Mat::Constant(1, 1, number(j, name));
  if (!j.is_array()) throw Error(Errc::Schema, name + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Mat();
  if (!j[0].is_array()) throw Error(Errc::Schema, name + " must be an array of rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(Errc::DimensionMismatch, name + " has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = number(row[static_cast<std::size_t>(c)], name);
  }
  return M;
}

ProblemFile parse_problem(const json& doc) {
  only_keys(doc, {"n", "m1", "m2", "dynamics", "players", "forcing", "options"}, "problem");
  ProblemFile pf;
  RawGame& r = pf.raw;
  r.n = integer(doc, "n");
  r.m1 = integer(doc, "m1");
  r.m2 = doc.contains("m2") ? integer(doc, "m2") : 0;
  if (!doc.contains("dynamics")) throw Error(Errc::Schema, "missing \"dynamics\"");
  const json& d = doc["dynamics"];
  only_keys(d, kDynamicsKeys, "dynamics");
  r.A = optional_mat(d, "A");
  r.Abar = optional_mat(d, "A_bar");
  r.C = optional_mat(d, "C");
  r.Cbar = optional_mat(d, "C_bar");
  r.B1 = optional_mat(d, "B1");
  r.B1bar = optional_mat(d, "B1_bar");
  r.D1 = optional_mat(d, "D1");
  r.D1bar = optional_mat(d, "D1_bar");
  r.B2 = optional_mat(d, "B2");
  r.B2bar = optional_mat(d, "B2_bar");
  r.D2 = optional_mat(d, "D2");
  r.D2bar = optional_mat(d, "D2_bar");
  if (!doc.contains("players") || !doc["players"].is_array())
    throw Error(Errc::Schema, "\"players\" must be an array of cost blocks");
  for (const json& p : doc["players"]) {
    only_keys(p, kPlayerKeys, "player cost");
    r.players.push_back(RawPlayer{optional_mat(p, "Q"), optional_mat(p, "Q_bar"), optional_mat(p, "S1"),
                                  optional_mat(p, "S1_bar"), optional_mat(p, "S2"),
                                  optional_mat(p, "S2_bar"), optional_mat(p, "R11"),
                                  optional_mat(p, "R11_bar"), optional_mat(p, "R12"),
                                  optional_mat(p, "R12_bar"), optional_mat(p, "R22"),
                                  optional_mat(p, "R22_bar")});
  }
  if (doc.contains("forcing")) {
    if (!doc["forcing"].is_array()) throw Error(Errc::Schema, "\"forcing\" must be an array");
    for (const json& f : doc["forcing"]) {
      only_keys(f, {"kind", "amplitude", "rate"}, "forcing term");
      if (!f.contains("kind") || !f["kind"].is_string() || !f.contains("amplitude") || !f.contains("rate"))
        throw Error(Errc::Schema, "forcing term needs kind, amplitude, rate");
      r.forcing.push_back({forcing_kind_from(f["kind"].get<std::string>()),
                           vec_from_json(f["amplitude"], "amplitude"), number(f["rate"], "rate")});
    }
  }
  if (doc.contains("options")) pf.options = options_from_json(doc["options"]);
  pf.spec = validate(r);
  return pf;
}

ProblemFile parse_problem_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::Schema, std::string("malformed JSON: ") + e.what());
  }
  return parse_problem(doc);
}

ProblemFile load_problem(const std::string& path) { return parse_problem_text(read_file(path)); }

FreeComponents parse_free_components(const json& doc, Eigen::Index m, Eigen::Index n) {
  only_keys(doc, {"theta", "theta_bar"}, "free components");
  FreeComponents f{Mat::Zero(m, n), Mat::Zero(m, n)};
  if (doc.contains("theta")) f.theta = mat_from_json(doc["theta"], "theta");
  if (doc.contains("theta_bar")) f.theta_bar = mat_from_json(doc["theta_bar"], "theta_bar");
  if (f.theta.rows() != m || f.theta.cols() != n || f.theta_bar.rows() != m || f.theta_bar.cols() != n)
    throw Error(Errc::DimensionMismatch, "free components must be m x n");
  return f;
}

StabilizerSummary summarize(const StabilizerCertificate& c) {
  return {c.is_stabilizer, c.min_eig_P0, c.min_eig_P0bar, c.hurwitz_abscissa, c.stochastic_abscissa,
          to_string(c.failure_reason)};
}

json to_json(const ReportFile& r) {
  json doc;
  doc["mode"] = r.mode;
  doc["status"] = r.status;
  json mats = json::object();
  for (const auto& [k, M] : r.matrices) mats[k] = mat_to_json(M);
  doc["solution"] = mats;
  json off = json::array();
  for (const ExpTerm& e : r.offset) off.push_back({{"rate", e.rate}, {"v", vec_to_json(e.v)}});
  doc["offset"] = off;
  doc["residuals"] = residuals_to_json(r.residuals);
  doc["sign_margins"] = r.sign_margins;
  doc["range_residuals"] = residuals_to_json(r.range_residuals);
  doc["stabilizer"] = {{"is_stabilizer", r.stabilizer.is_stabilizer},
                       {"min_eig_P0", r.stabilizer.min_eig_P0},
                       {"min_eig_P0bar", r.stabilizer.min_eig_P0bar},
                       {"hurwitz_abscissa", r.stabilizer.hurwitz_abscissa},
                       {"stochastic_abscissa", r.stabilizer.stochastic_abscissa},
                       {"failure_reason", r.stabilizer.failure_reason}};
  if (r.value)
    doc["value"] = {{"quadratic", r.value->quadratic},
                    {"linear", r.value->linear},
                    {"constant", r.value->constant},
                    {"total", r.value->total}};
  if (!r.simulation.empty()) {
    json sims = json::array();
    for (const CostEstimate& c : r.simulation)
      sims.push_back({{"mean", c.mean}, {"stderr", c.stderr_}, {"T", c.T}, {"dt", c.dt},
                      {"paths", c.paths}, {"tail_flag", c.tail_flag}});
    doc["simulation"] = sims;
  }
  doc["solver_meta"] = {{"iterations", r.meta.iterations},
                        {"wall_time_ms", r.meta.wall_time_ms},
                        {"eps_chain", r.meta.eps_chain},
                        {"diagnostic", r.meta.diagnostic}};
  doc["options"] = options_to_json(r.options);
  if (!r.extra.empty()) doc["extra"] = r.extra;
  return doc;
}

ReportFile report_from_json(const json& doc) {
  only_keys(doc, {"mode", "status", "solution", "offset", "residuals", "sign_margins", "range_residuals",
                  "stabilizer", "value", "simulation", "solver_meta", "options", "extra"},
            "report");
  ReportFile r;
  if (!doc.contains("mode") || !doc.contains("status")) throw Error(Errc::Schema, "report needs mode and status");
  r.mode = doc["mode"].get<std::string>();
  r.status = doc["status"].get<std::string>();
  if (doc.contains("solution")) {
    if (!doc["solution"].is_object()) throw Error(Errc::Schema, "solution must be an object");
    for (const auto& [k, v] : doc["solution"].items()) r.matrices[k] = mat_from_json(v, k);
  }
  if (doc.contains("offset"))
    for (const json& e : doc["offset"]) r.offset.push_back({vec_from_json(e.at("v"), "offset"), number(e.at("rate"), "rate")});
  if (doc.contains("residuals")) r.residuals = residuals_from_json(doc["residuals"], "residuals");
  if (doc.contains("sign_margins"))
    for (const json& v : doc["sign_margins"])
      r.sign_margins.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : number(v, "sign_margins"));
  if (doc.contains("range_residuals"))
    r.range_residuals = residuals_from_json(doc["range_residuals"], "range_residuals");
  if (doc.contains("stabilizer")) {
    const json& s = doc["stabilizer"];
    r.stabilizer.is_stabilizer = s.value("is_stabilizer", false);
    r.stabilizer.min_eig_P0 = diagnostic(s, "min_eig_P0");
    r.stabilizer.min_eig_P0bar = diagnostic(s, "min_eig_P0bar");
    r.stabilizer.hurwitz_abscissa = diagnostic(s, "hurwitz_abscissa");
    r.stabilizer.stochastic_abscissa = diagnostic(s, "stochastic_abscissa");
    r.stabilizer.failure_reason = s.value("failure_reason", std::string());
  }
  if (doc.contains("value")) {
    const json& v = doc["value"];
    r.value = ValueReport{v.value("quadratic", 0.0), v.value("linear", 0.0), v.value("constant", 0.0),
                          v.value("total", 0.0)};
  }
  if (doc.contains("simulation"))
    for (const json& c : doc["simulation"]) {
      CostEstimate e;
      e.mean = c.value("mean", 0.0);
      e.stderr_ = c.value("stderr", 0.0);
      e.T = c.value("T", 0.0);
      e.dt = c.value("dt", 0.0);
      e.paths = c.value("paths", 0);
      e.tail_flag = c.value("tail_flag", false);
      r.simulation.push_back(e);
    }
  if (doc.contains("solver_meta")) {
    const json& m = doc["solver_meta"];
    r.meta.iterations = m.value("iterations", 0);
    r.meta.wall_time_ms = m.value("wall_time_ms", 0.0);
    r.meta.eps_chain = m.value("eps_chain", std::vector<double>{});
    r.meta.diagnostic = m.value("diagnostic", std::string());
  }
  if (doc.contains("options")) r.options = options_from_json(doc["options"]);
  if (doc.contains("extra")) r.extra = doc["extra"];
  return r;
}

std::string emit_report(const ReportFile& r) { return to_json(r).dump(2) + "\n"; }

ReportFile parse_report_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
    return report_from_json(doc);
  } catch (const json::exception& e) {
    throw Error(Errc::Schema, std::string("malformed report: ") + e.what());
  }
}

ReportFile load_report(const std::string& path) { return parse_report_text(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Schema, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Schema, "cannot write " + path);
  out << text;
}

}  // namespace mflq
