#include "mflq/cli.hpp"

#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <sstream>

#include "mflq/errors.hpp"
#include "mflq/io.hpp"

namespace mflq {

namespace {

using nlohmann::json;

const std::vector<std::string> kModes = {"control", "nash-open", "nash-closed", "zerosum-open",
                                         "zerosum-closed"};

bool is_zero_sum(const std::string& mode) { return mode.rfind("zerosum", 0) == 0; }
bool is_nash(const std::string& mode) { return mode.rfind("nash", 0) == 0; }

struct Output {
  std::string path;
  std::ostream& out;
  void write(const std::string& text) const {
    if (path.empty() || path == "-")
      out << text;
    else
      write_file(path, text);
  }
};

ResidualMap pick(const ResidualMap& r, std::initializer_list<const char*> keys) {
  ResidualMap out;
  for (const char* k : keys)
    if (auto it = r.find(k); it != r.end()) out[k] = it->second;
  return out;
}

// ---- solution <-> report ----

void put(ReportFile& r, const char* name, const Mat& M) { r.matrices[name] = M; }

const Mat& need(const ReportFile& r, const char* name, Eigen::Index rows, Eigen::Index cols) {
  auto it = r.matrices.find(name);
  if (it == r.matrices.end()) throw Error(Errc::Schema, std::string("report lacks solution.") + name);
  if (it->second.rows() != rows || it->second.cols() != cols)
    throw Error(Errc::DimensionMismatch, std::string("solution.") + name + " has wrong shape");
  return it->second;
}

ReportFile report_of(const ControlAreSolution& s) {
  ReportFile r;
  r.status = to_string(s.status);
  put(r, "P", s.P);
  put(r, "Phat", s.Phat);
  put(r, "Sigma", s.Sigma);
  put(r, "SigmaBar", s.SigmaBar);
  put(r, "Theta", s.Theta);
  put(r, "ThetaBar", s.ThetaBar);
  r.residuals = pick(s.residuals, {"are1", "are2"});
  r.range_residuals = pick(s.residuals, {"range1", "range2"});
  r.sign_margins = {min_eig_sym(s.Sigma), min_eig_sym(s.SigmaBar)};
  r.stabilizer = summarize(s.stabilizer);
  r.meta = s.meta;
  return r;
}

ReportFile report_of(const ZeroSumSolution& s) {
  ReportFile r;
  r.status = to_string(s.status);
  put(r, "Pc", s.Pc);
  put(r, "Pchat", s.Pchat);
  put(r, "SigmaC", s.SigmaC);
  put(r, "SigmaBarC", s.SigmaBarC);
  put(r, "ThetaStar", s.ThetaStar);
  put(r, "ThetaBarStar", s.ThetaBarStar);
  r.residuals = pick(s.residuals, {"are1", "are2"});
  r.range_residuals = pick(s.residuals, {"range1", "range2"});
  r.sign_margins.assign(s.sign_margins.begin(), s.sign_margins.end());
  r.stabilizer = summarize(s.stabilizer);
  r.meta = s.meta;
  json roots = json::array();
  for (const Mat& P : s.roots) roots.push_back(mat_to_json(P));
  r.extra["p_roots"] = roots;
  return r;
}

ReportFile report_of(const OpenLoopNashSolution& s) {
  ReportFile r;
  r.status = to_string(s.status);
  put(r, "P1", s.P1);
  put(r, "P2", s.P2);
  put(r, "P1hat", s.P1hat);
  put(r, "P2hat", s.P2hat);
  put(r, "ThetaStar2", s.ThetaStar2);
  put(r, "ThetaBarStar2", s.ThetaBarStar2);
  put(r, "SigmaStack", s.SigmaStack);
  put(r, "SigmaBarStack", s.SigmaBarStack);
  r.residuals = s.residuals;
  r.stabilizer = summarize(s.stabilizer);
  r.meta = s.meta;
  return r;
}

ReportFile report_of(const ClosedLoopNashSolution& s) {
  ReportFile r;
  r.status = to_string(s.status);
  put(r, "P1", s.P1);
  put(r, "P2", s.P2);
  put(r, "P1hat", s.P1hat);
  put(r, "P2hat", s.P2hat);
  put(r, "ThetaStar", s.ThetaStar);
  put(r, "ThetaBarStar", s.ThetaBarStar);
  put(r, "Sigma1", s.Sigma1);
  put(r, "Sigma2", s.Sigma2);
  put(r, "SigmaBar1", s.SigmaBar1);
  put(r, "SigmaBar2", s.SigmaBar2);
  r.residuals = s.residuals;
  r.sign_margins = {min_eig_sym(s.Sigma1), min_eig_sym(s.Sigma2), min_eig_sym(s.SigmaBar1),
                    min_eig_sym(s.SigmaBar2)};
  r.stabilizer = summarize(s.stabilizer);
  r.meta = s.meta;
  return r;
}

ControlAreSolution control_from(const ReportFile& r, const LqSpec& s) {
  const Eigen::Index n = s.n, m = s.m();
  ControlAreSolution sol;
  sol.P = need(r, "P", n, n);
  sol.Phat = need(r, "Phat", n, n);
  sol.Theta = need(r, "Theta", m, n);
  sol.ThetaBar = need(r, "ThetaBar", m, n);
  sol.Sigma = riccati_map(s, sol.P).Sigma;
  sol.SigmaBar = riccati_hat_map(s, sol.P, sol.Phat).Sigma;
  sol.status = status_from(r.status);
  return sol;
}

ZeroSumSolution zero_sum_from(const ReportFile& r, const LqSpec& z) {
  const Eigen::Index n = z.n, m = z.m();
  ZeroSumSolution sol;
  sol.open_rep = r.mode == "zerosum-open";
  sol.Pc = need(r, "Pc", n, n);
  sol.Pchat = need(r, "Pchat", n, n);
  sol.ThetaStar = need(r, "ThetaStar", m, n);
  sol.ThetaBarStar = need(r, "ThetaBarStar", m, n);
  sol.SigmaC = riccati_map(z, sol.Pc).Sigma;
  sol.SigmaBarC = riccati_hat_map(z, sol.Pc, sol.Pchat).Sigma;
  sol.status = status_from(r.status);
  return sol;
}

OpenLoopNashSolution open_nash_from(const ReportFile& r, const GameSpec& g) {
  const Eigen::Index n = g.n, m = g.m();
  OpenLoopNashSolution sol;
  sol.P1 = need(r, "P1", n, n);
  sol.P2 = need(r, "P2", n, n);
  sol.P1hat = need(r, "P1hat", n, n);
  sol.P2hat = need(r, "P2hat", n, n);
  sol.ThetaStar2 = need(r, "ThetaStar2", m, n);
  sol.ThetaBarStar2 = need(r, "ThetaBarStar2", m, n);
  sol.SigmaStack = stacked_blocks(g, sol.P1, sol.P2).Sigma;
  sol.SigmaBarStack = stacked_hat_blocks(g, sol.P1, sol.P2, sol.P1hat, sol.P2hat).Sigma;
  sol.status = status_from(r.status);
  return sol;
}

ClosedLoopNashSolution closed_nash_from(const ReportFile& r, const GameSpec& g) {
  const Eigen::Index n = g.n, m = g.m(), m1 = g.m1, m2 = g.m2;
  ClosedLoopNashSolution sol;
  sol.P1 = need(r, "P1", n, n);
  sol.P2 = need(r, "P2", n, n);
  sol.P1hat = need(r, "P1hat", n, n);
  sol.P2hat = need(r, "P2hat", n, n);
  sol.ThetaStar = need(r, "ThetaStar", m, n);
  sol.ThetaBarStar = need(r, "ThetaBarStar", m, n);
  const HatCoefficients h = hat(g);
  const Mat D1 = g.D.leftCols(m1), D2 = g.D.rightCols(m2);
  const Mat Dh1 = h.D.leftCols(m1), Dh2 = h.D.rightCols(m2);
  sol.Sigma1 = sym(g.cost[0].R.topLeftCorner(m1, m1) + D1.transpose() * sol.P1 * D1);
  sol.Sigma2 = sym(g.cost[1].R.bottomRightCorner(m2, m2) + D2.transpose() * sol.P2 * D2);
  sol.SigmaBar1 = sym(h.player[0].R.topLeftCorner(m1, m1) + Dh1.transpose() * sol.P1 * Dh1);
  sol.SigmaBar2 = sym(h.player[1].R.bottomRightCorner(m2, m2) + Dh2.transpose() * sol.P2 * Dh2);
  sol.status = status_from(r.status);
  return sol;
}

void require_mode_fits(const std::string& mode, const GameSpec& g) {
  if (mode == "control" && g.players != 1)
    throw Error(Errc::DimensionMismatch, "mode control needs a single cost block");
  if (mode != "control" && g.players != 2)
    throw Error(Errc::DimensionMismatch, "mode " + mode + " needs two cost blocks");
  if (is_nash(mode) && (g.m1 == 0 || g.m2 == 0))
    throw Error(Errc::DimensionMismatch, "games need m1, m2 >= 1");
}

void attach_offsets(ReportFile& r, const std::function<FeedbackStrategy()>& synth) {
  try {
    r.offset = synth().offset;
  } catch (const Error& e) {
    r.extra["offset_error"] = e.what();
  }
}

void strip_timing(ReportFile& r, bool timing) {
  if (!timing) r.meta.wall_time_ms = 0.0;
}

// ---- commands ----

struct SolveArgs {
  std::string problem, mode, out, theta_free;
  bool timing = false;
  bool convexity = false;
};

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  const ProblemFile pf = load_problem(a.problem);
  const GameSpec& g = pf.spec;
  require_mode_fits(a.mode, g);
  SolveOptions opts = pf.options;
  if (!a.theta_free.empty())
    opts.free_components = parse_free_components(json::parse(read_file(a.theta_free)), g.m(), g.n);

  ReportFile rep;
  bool solved = false;
  if (a.mode == "control") {
    const LqSpec s = control_spec(g);
    const ControlAreSolution sol = solve_control_are(s, opts);
    rep = report_of(sol);
    solved = sol.status == Status::solved;
    if (solved) attach_offsets(rep, [&] { return synthesize_strategy(s, sol, opts.free_components); });
  } else if (is_zero_sum(a.mode)) {
    const ZeroSumSpec z = zero_sum_reduce(g);
    const ZeroSumSolution sol =
        a.mode == "zerosum-open" ? solve_zerosum_openrep_are(z, opts) : solve_zerosum_are(z, opts);
    rep = report_of(sol);
    solved = sol.status == Status::solved;
    if (solved) attach_offsets(rep, [&] { return synthesize_strategy(z, sol, opts.free_components); });
    if (sol.open_rep && a.convexity) {
      json cv = json::array();
      for (int i = 1; i <= 2; ++i) {
        const ConvexityReport c = convexity_check(z, i);
        cv.push_back({{"player", i}, {"verdict", to_string(c.verdict)}, {"min_eigenvalue", c.min_eigenvalue},
                      {"max_eigenvalue", c.max_eigenvalue}, {"necessary_only", c.necessary_only}});
      }
      rep.extra["convexity"] = cv;
    }
  } else if (a.mode == "nash-open") {
    const OpenLoopNashSolution sol = solve_openloop_nash_are(g, opts);
    rep = report_of(sol);
    solved = sol.status == Status::solved;
    if (solved) attach_offsets(rep, [&] { return synthesize_strategy(g, sol); });
  } else {
    const ClosedLoopNashSolution sol = solve_closedloop_nash_are(g, opts);
    rep = report_of(sol);
    solved = sol.status == Status::solved;
    if (solved) attach_offsets(rep, [&] { return synthesize_strategy(g, sol); });
  }
  rep.mode = a.mode;
  rep.options = pf.options;
  if (opts.free_components)
    rep.extra["free_components"] = {{"theta", mat_to_json(opts.free_components->theta)},
                                    {"theta_bar", mat_to_json(opts.free_components->theta_bar)}};
  strip_timing(rep, a.timing);
  Output{a.out, out}.write(emit_report(rep));
  return solved ? kExitOk : kExitUncertified;
}

struct VerifyArgs {
  std::string problem, solution, out;
  bool convexity = false;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const ProblemFile pf = load_problem(a.problem);
  const GameSpec& g = pf.spec;
  const ReportFile in = load_report(a.solution);
  require_mode_fits(in.mode, g);
  const double tol = in.options.are_tol;
  std::map<std::string, bool> gates;
  ReportFile rep;
  rep.mode = in.mode;
  rep.options = in.options;

  auto lq_gates = [&](const LqSpec& s, const Mat& P, const Mat& Phat, const Mat& Th, const Mat& Tb,
                      bool signs, const std::array<Mat, 4>* sign_blocks) {
    const RiccatiTerms t = riccati_map(s, P);
    const RiccatiTerms th = riccati_hat_map(s, P, Phat);
    rep.residuals = {{"are1", t.value.norm()},
                     {"are2", th.value.norm()},
                     {"stationarity1", (t.Sigma * Th + t.K).norm()},
                     {"stationarity2", (th.Sigma * Tb + th.K).norm()}};
    const RangeCheck r1 = range_contains(t.Sigma, t.K), r2 = range_contains(th.Sigma, th.K);
    rep.range_residuals = {{"range1", r1.residual}, {"range2", r2.residual}};
    gates["residuals"] = rep.residuals["are1"] <= tol && rep.residuals["are2"] <= tol &&
                         rep.residuals["stationarity1"] <= tol * (1 + Th.norm()) &&
                         rep.residuals["stationarity2"] <= tol * (1 + Tb.norm());
    gates["range"] = r1.contained && r2.contained;
    if (sign_blocks) {
      const auto& b = *sign_blocks;
      rep.sign_margins = {min_eig_sym(b[0]), min_eig_sym(b[1]), max_eig_sym(b[2]), max_eig_sym(b[3])};
      if (signs)
        gates["signs"] = rep.sign_margins[0] >= -kTauPsd && rep.sign_margins[1] >= -kTauPsd &&
                         rep.sign_margins[2] <= kTauPsd && rep.sign_margins[3] <= kTauPsd;
    } else {
      rep.sign_margins = {min_eig_sym(t.Sigma), min_eig_sym(th.Sigma)};
      gates["signs"] = rep.sign_margins[0] >= -kTauPsd && rep.sign_margins[1] >= -kTauPsd;
    }
    const StabilizerCertificate c = check_stabilizer(s, Th, Tb);
    rep.stabilizer = summarize(c);
    gates["stabilizer"] = c.is_stabilizer;
  };
  auto convexity_gate = [&](auto&& spec, ConvexityVerdict want2) {
    json cv = json::array();
    bool ok = true;
    for (int i = 1; i <= 2; ++i) {
      const ConvexityReport c = convexity_check(spec, i);
      ok = ok && c.verdict == (i == 1 ? ConvexityVerdict::convex : want2);
      cv.push_back({{"player", i}, {"verdict", to_string(c.verdict)}, {"min_eigenvalue", c.min_eigenvalue},
                    {"max_eigenvalue", c.max_eigenvalue}, {"necessary_only", c.necessary_only}});
    }
    rep.extra["convexity"] = cv;
    gates["convexity"] = ok;
  };

  if (in.mode == "control") {
    const LqSpec s = control_spec(g);
    const ControlAreSolution sol = control_from(in, s);
    lq_gates(s, sol.P, sol.Phat, sol.Theta, sol.ThetaBar, true, nullptr);
  } else if (is_zero_sum(in.mode)) {
    const ZeroSumSpec z = zero_sum_reduce(g);
    const ZeroSumSolution sol = zero_sum_from(in, z);
    const auto blocks = zero_sum_sign_blocks(z, sol.Pc);
    lq_gates(z, sol.Pc, sol.Pchat, sol.ThetaStar, sol.ThetaBarStar, !sol.open_rep, &blocks);
    if (sol.open_rep && a.convexity) convexity_gate(z, ConvexityVerdict::concave);
  } else if (in.mode == "nash-open") {
    const OpenLoopNashSolution sol = open_nash_from(in, g);
    rep.residuals = are_residuals(sol, g);
    bool ok = true;
    for (const auto& [k, v] : rep.residuals) ok = ok && v <= tol;
    gates["residuals"] = ok;
    const StabilizerCertificate c = check_stabilizer(g, sol.ThetaStar2, sol.ThetaBarStar2);
    rep.stabilizer = summarize(c);
    gates["stabilizer"] = c.is_stabilizer;
    if (a.convexity) convexity_gate(g, ConvexityVerdict::convex);
  } else if (in.mode == "nash-closed") {
    const ClosedLoopNashSolution sol = closed_nash_from(in, g);
    const NashCertificate nc = nash_certificate(g, sol);
    rep.residuals = nc.stationarity_residuals;
    bool ok = true;
    for (const auto& [k, v] : rep.residuals) ok = ok && v <= tol;
    gates["residuals"] = ok;
    rep.sign_margins = nc.sign_margins;
    bool signs = true;
    for (double v : nc.sign_margins) signs = signs && v >= -kTauPsd;
    gates["signs"] = signs;
    const StabilizerCertificate c = check_stabilizer(g, sol.ThetaStar, sol.ThetaBarStar);
    rep.stabilizer = summarize(c);
    gates["stabilizer"] = c.is_stabilizer;
  } else {
    throw Error(Errc::Schema, "unknown mode '" + in.mode + "' in report");
  }

  bool pass = true;
  json gj = json::object();
  for (const auto& [k, v] : gates) {
    gj[k] = v;
    pass = pass && v;
  }
  rep.extra["gates"] = gj;
  rep.status = pass ? "verified" : "rejected";
  Output{a.out, out}.write(emit_report(rep));
  return pass ? kExitOk : kExitUncertified;
}

struct SimulateArgs {
  std::string problem, solution, out, x0;
  double T = 20.0, dt = 1e-3;
  int paths = 1000;
  std::uint64_t seed = 0;
  bool deviation = false, force = false, no_antithetic = false;
};

Vec parse_csv(const std::string& text, Eigen::Index n) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(Errc::Schema, "--x0 must be comma-separated numbers");
    }
  }
  if (static_cast<Eigen::Index>(vals.size()) != n)
    throw Error(Errc::DimensionMismatch, "--x0 must have n entries");
  return Eigen::Map<Vec>(vals.data(), n);
}

json deviation_json(const DeviationReport& d) {
  json outs = json::array();
  for (const DeviationOutcome& o : d.outcomes)
    outs.push_back({{"player", o.delta.player}, {"amplitude", o.delta.amplitude(0)}, {"rate", o.delta.rate},
                    {"delta_J", o.delta_J}, {"stderr", o.stderr_}, {"pass", o.pass}});
  return {{"kind", d.kind == DeviationKind::saddle ? "saddle" : "nash"}, {"outcomes", outs}, {"pass", d.pass}};
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ProblemFile pf = load_problem(a.problem);
  const GameSpec& g = pf.spec;
  const ReportFile in = load_report(a.solution);
  require_mode_fits(in.mode, g);
  if (in.status != "solved" && !a.force)
    throw Error(Errc::NotSolved, "solution status is " + in.status + " (use --force)");
  const Vec x0 = parse_csv(a.x0, g.n);
  SimOptions so;
  so.T = a.T;
  so.dt = a.dt;
  so.paths = a.paths;
  so.seed = a.seed;
  so.antithetic = !a.no_antithetic;

  ReportFile rep;
  rep.mode = in.mode;
  rep.status = in.status;
  rep.options = in.options;
  rep.extra["x0"] = std::vector<double>(x0.data(), x0.data() + x0.size());
  const Output sink{a.out, out};
  try {
    if (in.mode == "control" || is_zero_sum(in.mode)) {
      const LqSpec s = in.mode == "control" ? control_spec(g) : zero_sum_reduce(g);
      FeedbackStrategy st;
      ValueReport v;
      if (in.mode == "control") {
        const ControlAreSolution sol = control_from(in, s);
        const OffsetSolution off = solve_offsets(s, sol);
        st = {sol.Theta, sol.ThetaBar, off.v_star};
        v = value_function(s, sol, off, x0);
      } else {
        const ZeroSumSolution sol = zero_sum_from(in, s);
        const OffsetSolution off = solve_offsets(s, sol);
        st = {sol.ThetaStar, sol.ThetaBarStar, off.v_star};
        v = value_function(s, sol, off, x0);
      }
      rep.offset = st.offset;
      rep.value = v;
      const PathEnsemble e = simulate_closed_loop(s, st, x0, so);
      rep.simulation.push_back(estimate_cost(e, s, st, 1));
      rep.extra["value_gap"] = rep.simulation[0].mean - v.total;
      if (a.deviation) {
        const auto kind = is_zero_sum(in.mode) ? DeviationKind::saddle : DeviationKind::nash;
        rep.extra["deviation"] = deviation_json(
            deviation_test(s, st, x0, kind, default_perturbations(s.m1, s.m2), so));
      }
    } else {
      FeedbackStrategy st;
      if (in.mode == "nash-open") {
        const OpenLoopNashSolution sol = open_nash_from(in, g);
        st = {sol.ThetaStar2, sol.ThetaBarStar2, solve_offsets(g, sol).v_star};
      } else {
        const ClosedLoopNashSolution sol = closed_nash_from(in, g);
        st = {sol.ThetaStar, sol.ThetaBarStar, solve_offsets(g, sol).v_star};
      }
      rep.offset = st.offset;
      const PathEnsemble e = simulate_closed_loop(g, st, x0, so);
      for (int i = 1; i <= 2; ++i) rep.simulation.push_back(estimate_cost(e, g, st, i));
      if (a.deviation)
        rep.extra["deviation"] = deviation_json(
            deviation_test(g, st, x0, DeviationKind::nash, default_perturbations(g.m1, g.m2), so));
    }
  } catch (const Error& e) {
    if (e.code() != Errc::NonFiniteState) throw;
    rep.status = "blow_up";
    rep.extra["blow_up"] = e.what();
    sink.write(emit_report(rep));
    throw;
  }
  sink.write(emit_report(rep));
  const bool dev_ok = !rep.extra.contains("deviation") || rep.extra["deviation"]["pass"].get<bool>();
  return dev_ok ? kExitOk : kExitUncertified;
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case Errc::NonFiniteState: return kExitBlowUp;
    case Errc::NotSolved:
    case Errc::RangeConditionFailed:
    case Errc::ResolventSingular:
    case Errc::UnstableHomogeneousSystem: return kExitUncertified;
    default: return kExitInput;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field LQ control and game solver"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "solve the Riccati system of a problem file");
  solve->add_option("--problem", sa.problem, "problem JSON")->required();
  solve->add_option("--mode", sa.mode, "solver")->required()->check(CLI::IsMember(kModes));
  solve->add_option("--out", sa.out, "report path (default: stdout)");
  solve->add_option("--theta-free", sa.theta_free, "JSON with free components theta, theta_bar");
  solve->add_flag("--convexity", sa.convexity, "attach convexity checks (open representation)");
  solve->add_flag("--timing", sa.timing, "record wall time (reports are then not reproducible)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "recompute every certificate of a report");
  verify->add_option("--problem", va.problem, "problem JSON")->required();
  verify->add_option("--solution", va.solution, "report JSON")->required();
  verify->add_option("--out", va.out, "certificate path (default: stdout)");
  verify->add_flag("--convexity", va.convexity, "also require the convexity conditions");

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo cost of a solved strategy");
  sim->add_option("--problem", ma.problem, "problem JSON")->required();
  sim->add_option("--solution", ma.solution, "report JSON")->required();
  sim->add_option("--x0", ma.x0, "initial state, comma-separated")->required();
  sim->add_option("--horizon", ma.T, "truncation horizon T")->check(CLI::PositiveNumber);
  sim->add_option("--dt", ma.dt, "Euler step")->check(CLI::PositiveNumber);
  sim->add_option("--paths", ma.paths, "number of paths")->check(CLI::Range(2, 1 << 30));
  sim->add_option("--seed", ma.seed, "RNG seed");
  sim->add_option("--out", ma.out, "report path (default: stdout)");
  sim->add_flag("--deviation-test", ma.deviation, "run the default perturbation battery");
  sim->add_flag("--force", ma.force, "simulate an uncertified candidate");
  sim->add_flag("--no-antithetic", ma.no_antithetic, "independent paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return cmd_solve(sa, out);
    if (*verify) return cmd_verify(va, out);
    return cmd_simulate(ma, out);
  } catch (const Error& e) {
    err << "mflq: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "mflq: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace mflq
