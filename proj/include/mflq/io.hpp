#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mflq/equilibrium.hpp"
#include "mflq/simulate.hpp"

namespace mflq {

// Matrices are row-major arrays of arrays everywhere. Missing blocks are zero.
struct ProblemFile {
  RawGame raw;
  GameSpec spec;
  SolveOptions options;
};

ProblemFile parse_problem(const nlohmann::json& doc);
ProblemFile parse_problem_text(const std::string& text);
ProblemFile load_problem(const std::string& path);

FreeComponents parse_free_components(const nlohmann::json& doc, Eigen::Index m, Eigen::Index n);

struct StabilizerSummary {
  bool is_stabilizer = false;
  double min_eig_P0 = 0.0, min_eig_P0bar = 0.0;
  double hurwitz_abscissa = 0.0, stochastic_abscissa = 0.0;
  std::string failure_reason;
};
StabilizerSummary summarize(const StabilizerCertificate& c);

struct ReportFile {
  std::string mode, status;
  std::map<std::string, Mat> matrices;
  std::vector<ExpTerm> offset;
  ResidualMap residuals;
  std::vector<double> sign_margins;
  ResidualMap range_residuals;
  StabilizerSummary stabilizer;
  std::optional<ValueReport> value;
  std::vector<CostEstimate> simulation;  // one per player
  SolverMeta meta;
  SolveOptions options;                  // tolerances the report was produced at
  nlohmann::json extra = nlohmann::json::object();  // certificates, deviation verdicts
};

nlohmann::json to_json(const ReportFile& r);
ReportFile report_from_json(const nlohmann::json& doc);
// Sorted keys and shortest round-trip number formatting: byte-identical for identical input.
std::string emit_report(const ReportFile& r);
ReportFile parse_report_text(const std::string& text);
ReportFile load_report(const std::string& path);

nlohmann::json mat_to_json(const Mat& M);
Mat mat_from_json(const nlohmann::json& j, const std::string& name);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace mflq
