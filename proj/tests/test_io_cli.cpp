#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "mflq/cli.hpp"
#include "mflq/errors.hpp"
#include "test_support.hpp"

namespace mflq {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::fixture;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mflq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mflq_") + info->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

Errc parse_code(const std::string& text) {
  try {
    parse_problem_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << text;
  return Errc::NonFinite;
}

const char* kScalar = R"({"n": 1, "m1": 1, "dynamics": {"A": -1, "B1": 1}, "players": [{"Q": 1, "R11": 1}]})";

TEST(Parse, BareNumberIsOneByOne) {
  const ProblemFile pf = parse_problem_text(kScalar);
  EXPECT_EQ(pf.spec.A(0, 0), -1.0);
  EXPECT_EQ(pf.spec.m2, 0);
  EXPECT_EQ(pf.spec.cost[0].Qbar.norm(), 0.0);
}

TEST(Parse, Strictness) {
  EXPECT_EQ(parse_code(R"({"n": 1, "m1": 1, "dynamics": {"A": -1, "E": 1}, "players": []})"), Errc::Schema);
  EXPECT_EQ(parse_code(R"({"n": 1, "m1": 1, "dynamics": {"A": -1}, "players": [], "extra": 1})"), Errc::Schema);
  EXPECT_EQ(parse_code(R"({"n": 2, "m1": 1, "dynamics": {"A": [[0, 0], [0]]}, "players": []})"),
            Errc::DimensionMismatch);
  EXPECT_EQ(parse_code(R"({"n": 1, "m1": 1, "dynamics": {"A": null}, "players": []})"), Errc::Schema);
  EXPECT_EQ(parse_code(R"({"n": 1.5, "m1": 1, "dynamics": {}, "players": []})"), Errc::Schema);
  EXPECT_EQ(parse_code("{not json"), Errc::Schema);
  EXPECT_EQ(parse_code(R"({"n": 1, "m1": 1, "dynamics": {"A": -1, "B1": 1}, "players": [{"Q": 1, "R11": 1}],
                          "options": {"damping": 2}})"),
            Errc::Schema);
  EXPECT_EQ(parse_code(R"({"n": 1, "m1": 1, "dynamics": {"A": -1, "B1": 1}, "players": [{"Q": 1, "R11": 1}],
                          "forcing": [{"kind": "drift", "amplitude": 1, "rate": 1}]})"),
            Errc::Schema);
}

TEST(Parse, BadDimensionFixture) {
  try {
    load_problem(fixture("bad_dimension.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Parse, MatricesAreRowMajor) {
  const ProblemFile pf = load_problem(fixture("nonsymmetric_A.json"));
  const json doc = json::parse(read_file(fixture("nonsymmetric_A.json")));
  const json& A = doc["dynamics"]["A"];
  for (Eigen::Index i = 0; i < pf.spec.n; ++i)
    for (Eigen::Index j = 0; j < pf.spec.n; ++j)
      EXPECT_EQ(pf.spec.A(i, j), A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>());
  EXPECT_NE(pf.spec.A, pf.spec.A.transpose());
}

TEST(Parse, ForcingAndFreeComponents) {
  const ProblemFile pf = parse_problem_text(
      R"({"n": 1, "m1": 1, "dynamics": {"A": -1, "B1": 1}, "players": [{"Q": 1, "R11": 1}],
          "forcing": [{"kind": "sigma", "amplitude": [0.5], "rate": 2}], "options": {"are_tol": 1e-9}})");
  ASSERT_EQ(pf.spec.forcing.size(), 1u);
  EXPECT_EQ(pf.spec.forcing[0].kind, ForcingKind::sigma);
  EXPECT_EQ(pf.options.are_tol, 1e-9);
  const FreeComponents f = parse_free_components(json::parse(read_file(fixture("example2_theta_free.json"))), 2, 1);
  EXPECT_EQ(f.theta(0, 0), 1.0);
  EXPECT_THROW(parse_free_components(json::parse(R"({"theta": [[1]]})"), 2, 1), Error);
}

TEST(Report, RoundTripIsByteIdentical) {
  for (const char* name : {"example5.zerosum-closed.json", "example6.nash-closed.json", "nonsymmetric_A.control.json"}) {
    const std::string text = read_file(fixture(std::string("expected/") + name));
    EXPECT_EQ(emit_report(parse_report_text(text)), text) << name;
  }
}

TEST(Report, NonFiniteDiagnosticsBecomeNull) {
  ReportFile r;
  r.mode = "control";
  r.status = "diverged";
  r.residuals["are1"] = std::nan("");
  const std::string text = emit_report(r);
  EXPECT_NE(text.find("\"are1\": null"), std::string::npos);
  EXPECT_TRUE(std::isnan(parse_report_text(text).residuals.at("are1")));
  EXPECT_THROW(parse_report_text(R"({"mode": "control"})"), Error);
  EXPECT_THROW(parse_report_text(R"({"mode": "control", "status": "solved", "bogus": 1})"), Error);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"solve", "--problem", fixture("example5.json"), "--mode", "bogus"}).code, 1);
  EXPECT_EQ(cli({"solve", "--problem", fixture("missing.json"), "--mode", "control"}).code, 1);
  EXPECT_EQ(cli({"solve", "--problem", fixture("example5.json"), "--mode", "control"}).code, 1);
  const CliRun bad = cli({"solve", "--problem", fixture("bad_dimension.json"), "--mode", "control"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("mflq:"), std::string::npos);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, SolvedExampleExitsZero) {
  const CliRun r = cli({"solve", "--problem", fixture("example5.json"), "--mode", "zerosum-closed"});
  ASSERT_EQ(r.code, 0) << r.err;
  const ReportFile rep = parse_report_text(r.out);
  EXPECT_EQ(rep.status, "solved");
  EXPECT_EQ(rep.stabilizer.is_stabilizer, true);
  EXPECT_EQ(rep.meta.wall_time_ms, 0.0);
}

TEST(Cli, SolveIsDeterministic) {
  const std::vector<std::string> args{"solve", "--problem", fixture("example6.json"), "--mode", "nash-closed"};
  EXPECT_EQ(cli(args).out, cli(args).out);
}

TEST(Cli, UncertifiedExamplesExitTwo) {
  const CliRun one = cli({"solve", "--problem", fixture("example1.json"), "--mode", "zerosum-closed"});
  EXPECT_EQ(one.code, 2);
  EXPECT_EQ(parse_report_text(one.out).status, "not_static_stabilizing");
  EXPECT_EQ(cli({"solve", "--problem", fixture("example2.json"), "--mode", "zerosum-closed"}).code, 2);
  EXPECT_EQ(cli({"solve", "--problem", fixture("example2.json"), "--mode", "zerosum-closed", "--theta-free",
                 fixture("example2_theta_free.json")})
                .code,
            0);
}

// Every stored report must be reproduced to 1e-9 in each matrix entry.
TEST(Cli, MatchesStoredReports) {
  for (const auto& entry : fs::directory_iterator(fixture("expected"))) {
    const std::string file = entry.path().filename().string();
    const std::string example = file.substr(0, file.find('.'));
    const std::string rest = file.substr(file.find('.') + 1);
    const std::string mode = rest.substr(0, rest.find('.'));
    std::vector<std::string> args{"solve", "--problem", fixture(example + ".json"), "--mode", mode};
    if (rest.find("theta_free") != std::string::npos) {
      args.push_back("--theta-free");
      args.push_back(fixture(example + "_theta_free.json"));
    }
    const ReportFile want = load_report(entry.path().string());
    const ReportFile got = parse_report_text(cli(args).out);
    EXPECT_EQ(got.status, want.status) << file;
    ASSERT_EQ(got.matrices.size(), want.matrices.size()) << file;
    for (const auto& [k, M] : want.matrices)
      EXPECT_LE(testing::max_abs_diff(got.matrices.at(k), M), 1e-9) << file << " " << k;
  }
}

TEST_F(Scratch, VerifyAcceptsSolvedReport) {
  const CliRun s = cli({"solve", "--problem", fixture("example5.json"), "--mode", "zerosum-closed", "--out",
                     path("sol.json")});
  ASSERT_EQ(s.code, 0);
  const CliRun v = cli({"verify", "--problem", fixture("example5.json"), "--solution", path("sol.json")});
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_EQ(parse_report_text(v.out).status, "verified");
}

TEST_F(Scratch, VerifyRejectsHandEditedP) {
  // Scalar saddle example at Pc = 1.1: Q + 2A Pc + C^2 Pc - K' Sigma^-1 K = 12 - 6.6 - 5.676 = -0.276.
  ReportFile rep = load_report(fixture("expected/example3.zerosum-closed.json"));
  rep.matrices["Pc"](0, 0) = 1.1;
  write_file(path("edited.json"), emit_report(rep));
  const CliRun v = cli({"verify", "--problem", fixture("example3.json"), "--solution", path("edited.json")});
  EXPECT_EQ(v.code, 2);
  const ReportFile out = parse_report_text(v.out);
  EXPECT_EQ(out.status, "rejected");
  EXPECT_NEAR(out.residuals.at("are1"), 0.276, 1e-12);
  EXPECT_FALSE(out.extra["gates"]["residuals"].get<bool>());
}

TEST_F(Scratch, SimulateFromZeroState) {
  ASSERT_EQ(cli({"solve", "--problem", fixture("example5.json"), "--mode", "zerosum-closed", "--out",
                 path("sol.json")})
                .code,
            0);
  const CliRun r = cli({"simulate", "--problem", fixture("example5.json"), "--solution", path("sol.json"), "--x0",
                     "0,0", "--horizon", "2", "--dt", "0.01", "--paths", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  const ReportFile rep = parse_report_text(r.out);
  ASSERT_EQ(rep.simulation.size(), 1u);
  EXPECT_LE(std::abs(rep.simulation[0].mean), 3 * rep.simulation[0].stderr_ + 1e-15);
  EXPECT_EQ(rep.value->total, 0.0);
  EXPECT_EQ(cli({"simulate", "--problem", fixture("example5.json"), "--solution", path("sol.json"), "--x0", "1"})
                .code,
            1);
}

TEST_F(Scratch, SimulateRefusesUncertifiedWithoutForce) {
  const std::string sol = fixture("expected/example4.zerosum-closed.json");
  EXPECT_EQ(cli({"simulate", "--problem", fixture("example4.json"), "--solution", sol, "--x0", "1,1"}).code, 2);
  const CliRun forced = cli({"simulate", "--problem", fixture("example4.json"), "--solution", sol, "--x0", "1,1",
                          "--force", "--horizon", "60", "--dt", "0.05", "--paths", "20"});
  ASSERT_TRUE(forced.code == 3 || forced.code == 0) << forced.err;
  if (forced.code == 0) {
    EXPECT_TRUE(parse_report_text(forced.out).simulation[0].tail_flag);
  } else if (forced.code == 3) {
    EXPECT_EQ(parse_report_text(forced.out).status, "blow_up");
  }
}

TEST_F(Scratch, NashSimulationReportsBothPlayers) {
  ASSERT_EQ(cli({"solve", "--problem", fixture("example7.json"), "--mode", "nash-open", "--out",
                 path("sol.json")})
                .code,
            0);
  const CliRun r = cli({"simulate", "--problem", fixture("example7.json"), "--solution", path("sol.json"), "--x0",
                     "1,-1", "--horizon", "3", "--dt", "0.01", "--paths", "50", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_report_text(r.out).simulation.size(), 2u);
}

}  // namespace
}  // namespace mflq
