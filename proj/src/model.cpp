#include "mflq/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mflq/errors.hpp"

namespace mflq {

namespace {

Mat shaped(const Mat& M, Eigen::Index r, Eigen::Index c, const char* name) {
  if (M.size() == 0) return Mat::Zero(r, c);  // omitted block means zero
  if (M.rows() != r || M.cols() != c)
    throw Error(Errc::DimensionMismatch, std::string(name) + " is " + std::to_string(M.rows()) +
                                             "x" + std::to_string(M.cols()) + ", expected " +
                                             std::to_string(r) + "x" + std::to_string(c));
  if (!M.allFinite()) throw Error(Errc::NonFinite, std::string(name) + " has non-finite entries");
  return M;
}

Mat symmetric(const Mat& M, const std::string& name) {
  if (M.size() == 0) return M;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > kTauSym * scale)
    throw Error(Errc::AsymmetryExceedsTolerance, name + " asymmetric by " + std::to_string(asym));
  return sym(M);
}

bool near(const Mat& X, const Mat& Y) {
  if (X.size() == 0 && Y.size() == 0) return true;
  const double scale = std::max({1.0, X.cwiseAbs().maxCoeff(), Y.cwiseAbs().maxCoeff()});
  return (X - Y).cwiseAbs().maxCoeff() <= kTauSym * scale;
}

Eigen::Index forcing_dim(ForcingKind k, int n, int m) {
  return (k == ForcingKind::rho1 || k == ForcingKind::rho2) ? m : n;
}

}  // namespace

const char* to_string(ForcingKind k) {
  switch (k) {
    case ForcingKind::b: return "b";
    case ForcingKind::sigma: return "sigma";
    case ForcingKind::q1: return "q1";
    case ForcingKind::q2: return "q2";
    case ForcingKind::rho1: return "rho1";
    case ForcingKind::rho2: return "rho2";
  }
  return "?";
}

ForcingKind forcing_kind_from(const std::string& s) {
  if (s == "b") return ForcingKind::b;
  if (s == "sigma") return ForcingKind::sigma;
  if (s == "q1" || s == "q") return ForcingKind::q1;
  if (s == "q2") return ForcingKind::q2;
  if (s == "rho1" || s == "rho") return ForcingKind::rho1;
  if (s == "rho2") return ForcingKind::rho2;
  throw Error(Errc::Schema, "unknown forcing kind '" + s + "'");
}

GameSpec validate(const RawGame& raw) {
  if (raw.n < 1 || raw.m1 < 0 || raw.m2 < 0 || raw.m1 + raw.m2 < 1)
    throw Error(Errc::DimensionMismatch, "need n >= 1, m1, m2 >= 0 and m1 + m2 >= 1");
  if (raw.players.empty() || raw.players.size() > 2)
    throw Error(Errc::DimensionMismatch, "one or two cost blocks required");
  if (raw.players.size() == 1 && raw.m2 != 0)
    throw Error(Errc::DimensionMismatch, "a single-player problem must have m2 = 0");

  GameSpec g;
  const int n = raw.n, m1 = raw.m1, m2 = raw.m2, m = m1 + m2;
  g.n = n;
  g.m1 = m1;
  g.m2 = m2;
  g.players = static_cast<int>(raw.players.size());
  g.A = shaped(raw.A, n, n, "A");
  g.Abar = shaped(raw.Abar, n, n, "A_bar");
  g.C = shaped(raw.C, n, n, "C");
  g.Cbar = shaped(raw.Cbar, n, n, "C_bar");
  auto stack_cols = [&](const Mat& X1, const Mat& X2, const char* a, const char* b) {
    Mat out(n, m);
    out << shaped(X1, n, m1, a), shaped(X2, n, m2, b);
    return out;
  };
  g.B = stack_cols(raw.B1, raw.B2, "B1", "B2");
  g.Bbar = stack_cols(raw.B1bar, raw.B2bar, "B1_bar", "B2_bar");
  g.D = stack_cols(raw.D1, raw.D2, "D1", "D2");
  g.Dbar = stack_cols(raw.D1bar, raw.D2bar, "D1_bar", "D2_bar");

  for (int i = 0; i < 2; ++i) {
    PlayerCost& c = g.cost[i];
    if (i >= g.players) {
      c = PlayerCost{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(m, n),
                     Mat::Zero(m, n), Mat::Zero(m, m), Mat::Zero(m, m)};
      continue;
    }
    const RawPlayer& p = raw.players[i];
    const std::string tag = "player " + std::to_string(i + 1) + " ";
    c.Q = symmetric(shaped(p.Q, n, n, "Q"), tag + "Q");
    c.Qbar = symmetric(shaped(p.Qbar, n, n, "Q_bar"), tag + "Q_bar");
    c.S.resize(m, n);
    c.S << shaped(p.S1, m1, n, "S1"), shaped(p.S2, m2, n, "S2");
    c.Sbar.resize(m, n);
    c.Sbar << shaped(p.S1bar, m1, n, "S1_bar"), shaped(p.S2bar, m2, n, "S2_bar");
    auto block = [&](const Mat& R11, const Mat& R12, const Mat& R22, const std::string& nm) {
      Mat R(m, m);
      const Mat r12 = shaped(R12, m1, m2, (nm + "12").c_str());
      R << symmetric(shaped(R11, m1, m1, (nm + "11").c_str()), tag + nm + "11"), r12,
          r12.transpose(), symmetric(shaped(R22, m2, m2, (nm + "22").c_str()), tag + nm + "22");
      return R;
    };
    c.R = block(p.R11, p.R12, p.R22, "R");
    c.Rbar = block(p.R11bar, p.R12bar, p.R22bar, "R_bar");
  }

  for (const ForcingTerm& t : raw.forcing) {
    if (!(t.rate > 0.0) || !std::isfinite(t.rate))
      throw Error(Errc::DimensionMismatch, "forcing rate must be positive and finite");
    if ((t.kind == ForcingKind::q2 || t.kind == ForcingKind::rho2) && g.players < 2)
      throw Error(Errc::DimensionMismatch, "player-2 forcing on a single-player problem");
    if (t.amplitude.size() != forcing_dim(t.kind, n, m))
      throw Error(Errc::DimensionMismatch,
                  std::string("forcing '") + to_string(t.kind) + "' has wrong amplitude size");
    if (!t.amplitude.allFinite()) throw Error(Errc::NonFinite, "forcing amplitude");
    g.forcing.push_back(t);
  }
  return g;
}

RawGame to_raw(const GameSpec& g) {
  RawGame r;
  r.n = g.n;
  r.m1 = g.m1;
  r.m2 = g.m2;
  r.A = g.A;
  r.Abar = g.Abar;
  r.C = g.C;
  r.Cbar = g.Cbar;
  r.B1 = g.B.leftCols(g.m1);
  r.B2 = g.B.rightCols(g.m2);
  r.B1bar = g.Bbar.leftCols(g.m1);
  r.B2bar = g.Bbar.rightCols(g.m2);
  r.D1 = g.D.leftCols(g.m1);
  r.D2 = g.D.rightCols(g.m2);
  r.D1bar = g.Dbar.leftCols(g.m1);
  r.D2bar = g.Dbar.rightCols(g.m2);
  for (int i = 0; i < g.players; ++i) {
    const PlayerCost& c = g.cost[i];
    RawPlayer p;
    p.Q = c.Q;
    p.Qbar = c.Qbar;
    p.S1 = c.S.topRows(g.m1);
    p.S2 = c.S.bottomRows(g.m2);
    p.S1bar = c.Sbar.topRows(g.m1);
    p.S2bar = c.Sbar.bottomRows(g.m2);
    p.R11 = c.R.topLeftCorner(g.m1, g.m1);
    p.R12 = c.R.topRightCorner(g.m1, g.m2);
    p.R22 = c.R.bottomRightCorner(g.m2, g.m2);
    p.R11bar = c.Rbar.topLeftCorner(g.m1, g.m1);
    p.R12bar = c.Rbar.topRightCorner(g.m1, g.m2);
    p.R22bar = c.Rbar.bottomRightCorner(g.m2, g.m2);
    r.players.push_back(p);
  }
  r.forcing = g.forcing;
  return r;
}

LqHat hat(const LqSpec& s) {
  return LqHat{s.A + s.Abar, s.B + s.Bbar, s.C + s.Cbar, s.D + s.Dbar,
               s.Q + s.Qbar, s.S + s.Sbar, s.R + s.Rbar};
}

HatCoefficients hat(const GameSpec& g) {
  HatCoefficients h;
  h.A = g.A + g.Abar;
  h.B = g.B + g.Bbar;
  h.C = g.C + g.Cbar;
  h.D = g.D + g.Dbar;
  for (int i = 0; i < 2; ++i) {
    h.player[i].Q = g.cost[i].Q + g.cost[i].Qbar;
    h.player[i].S = g.cost[i].S + g.cost[i].Sbar;
    h.player[i].R = g.cost[i].R + g.cost[i].Rbar;
  }
  return h;
}

LqSpec player_view(const GameSpec& g, int player) {
  if (player < 1 || player > g.players)
    throw Error(Errc::DimensionMismatch, "no player " + std::to_string(player));
  const PlayerCost& c = g.cost[player - 1];
  LqSpec s{g.n, g.m1, g.m2, g.A, g.Abar, g.C, g.Cbar, g.B, g.Bbar, g.D, g.Dbar,
           c.Q, c.Qbar, c.S, c.Sbar, c.R, c.Rbar, {}};
  const ForcingKind q = player == 1 ? ForcingKind::q1 : ForcingKind::q2;
  const ForcingKind rho = player == 1 ? ForcingKind::rho1 : ForcingKind::rho2;
  for (ForcingTerm t : g.forcing) {
    if (t.kind == q) t.kind = ForcingKind::q1;
    else if (t.kind == rho) t.kind = ForcingKind::rho1;
    else if (t.kind != ForcingKind::b && t.kind != ForcingKind::sigma) continue;
    s.forcing.push_back(t);
  }
  return s;
}

LqSpec control_spec(const GameSpec& g) {
  if (g.players != 1)
    throw Error(Errc::DimensionMismatch, "control problems have exactly one cost block");
  return player_view(g, 1);
}

ZeroSumSpec zero_sum_reduce(const GameSpec& g) {
  if (g.players != 2) throw Error(Errc::NotZeroSum, "zero-sum games need two cost blocks");
  const PlayerCost& a = g.cost[0];
  const PlayerCost& b = g.cost[1];
  const std::pair<const Mat*, const Mat*> pairs[] = {{&a.Q, &b.Q}, {&a.Qbar, &b.Qbar},
                                                     {&a.S, &b.S}, {&a.Sbar, &b.Sbar},
                                                     {&a.R, &b.R}, {&a.Rbar, &b.Rbar}};
  for (const auto& [x, y] : pairs)
    if (!near(*x, -*y)) throw Error(Errc::NotZeroSum, "player 2 cost is not minus player 1 cost");
  for (double rate : forcing_rates(g.forcing)) {
    if (!near(forcing_at(g.forcing, ForcingKind::q1, rate, g.n),
              -forcing_at(g.forcing, ForcingKind::q2, rate, g.n)) ||
        !near(forcing_at(g.forcing, ForcingKind::rho1, rate, g.m()),
              -forcing_at(g.forcing, ForcingKind::rho2, rate, g.m())))
      throw Error(Errc::NotZeroSum, "forcing q2, rho2 must be minus q1, rho1");
  }
  return player_view(g, 1);
}

GameSpec game_from_zero_sum(const ZeroSumSpec& z) {
  GameSpec g;
  g.n = z.n;
  g.m1 = z.m1;
  g.m2 = z.m2;
  g.players = 2;
  g.A = z.A;
  g.Abar = z.Abar;
  g.C = z.C;
  g.Cbar = z.Cbar;
  g.B = z.B;
  g.Bbar = z.Bbar;
  g.D = z.D;
  g.Dbar = z.Dbar;
  g.cost[0] = PlayerCost{z.Q, z.Qbar, z.S, z.Sbar, z.R, z.Rbar};
  g.cost[1] = PlayerCost{-z.Q, -z.Qbar, -z.S, -z.Sbar, -z.R, -z.Rbar};
  for (const ForcingTerm& t : z.forcing) {
    g.forcing.push_back(t);
    if (t.kind == ForcingKind::q1)
      g.forcing.push_back({ForcingKind::q2, -t.amplitude, t.rate});
    else if (t.kind == ForcingKind::rho1)
      g.forcing.push_back({ForcingKind::rho2, -t.amplitude, t.rate});
  }
  return g;
}

ClosedLoopCoefficients closed_loop_transform(const LqSpec& s, const FeedbackStrategy& st) {
  const Mat& Th = st.Theta;
  const Mat& Tb = st.ThetaBar;
  if (Th.rows() != s.m() || Th.cols() != s.n || Tb.rows() != s.m() || Tb.cols() != s.n)
    throw Error(Errc::DimensionMismatch, "feedback gains must be m x n");
  const LqHat h = hat(s);
  ClosedLoopCoefficients c;
  c.A = s.A + s.B * Th;
  c.Abar = s.Abar + s.Bbar * Tb + s.B * (Tb - Th);
  c.C = s.C + s.D * Th;
  c.Cbar = s.Cbar + s.Dbar * Tb + s.D * (Tb - Th);
  const Mat quad = s.S.transpose() * Th + Th.transpose() * s.S + Th.transpose() * s.R * Th;
  c.Q = s.Q + quad;
  c.Qbar = s.Qbar + h.S.transpose() * Tb + Tb.transpose() * h.S + Tb.transpose() * h.R * Tb - quad;
  c.S = s.S + s.R * Th;
  c.Sbar = s.Sbar + h.R * Tb - s.R * Th;
  c.R = s.R;
  c.Rbar = s.Rbar;
  c.Ahat = c.A + c.Abar;
  c.Chat = c.C + c.Cbar;
  c.Qhat = c.Q + c.Qbar;
  c.Shat = c.S + c.Sbar;
  // Deterministic rho equals its mean, so only ThetaBar acts on it.
  for (double rate : forcing_rates(s.forcing)) {
    const Vec q = forcing_at(s.forcing, ForcingKind::q1, rate, s.n) +
                  Tb.transpose() * forcing_at(s.forcing, ForcingKind::rho1, rate, s.m());
    if (q.squaredNorm() > 0.0) c.q.push_back({q, rate});
  }
  return c;
}

bool intrinsically_same(const FeedbackStrategy& s1, const FeedbackStrategy& s2, const Mat& B,
                        const Mat& Bbar, const Mat& D, const Mat& Dbar, double tau) {
  const Mat dT = s1.Theta - s2.Theta;
  const Mat dTb = s1.ThetaBar - s2.ThetaBar;
  const Mat Bh = B + Bbar, Dh = D + Dbar;
  if ((B * dT).norm() > tau || (D * dT).norm() > tau) return false;
  if ((Bh * dTb).norm() > tau || (Dh * dTb).norm() > tau) return false;
  // Offsets compared rate by rate; deterministic offsets equal their means.
  std::map<double, Vec> diff;
  const Eigen::Index m = B.cols();
  for (const ExpTerm& t : s1.offset) {
    auto [it, fresh] = diff.try_emplace(t.rate, Vec::Zero(m));
    it->second += t.v;
  }
  for (const ExpTerm& t : s2.offset) {
    auto [it, fresh] = diff.try_emplace(t.rate, Vec::Zero(m));
    it->second -= t.v;
  }
  for (const auto& [rate, dv] : diff)
    for (const Mat* M : {&B, &D, &Bbar, &Dbar})
      if ((*M * dv).norm() > tau) return false;
  return true;
}

bool intrinsically_same(const FeedbackStrategy& s1, const FeedbackStrategy& s2, const GameSpec& g,
                        double tau) {
  return intrinsically_same(s1, s2, g.B, g.Bbar, g.D, g.Dbar, tau);
}

std::vector<double> forcing_rates(const Forcing& f) {
  std::vector<double> r;
  for (const ForcingTerm& t : f) r.push_back(t.rate);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

Vec forcing_at(const Forcing& f, ForcingKind kind, double rate, Eigen::Index dim) {
  Vec v = Vec::Zero(dim);
  for (const ForcingTerm& t : f)
    if (t.kind == kind && t.rate == rate) v += t.amplitude;
  return v;
}

std::vector<ExpTerm> forcing_of(const Forcing& f, ForcingKind kind, Eigen::Index dim) {
  std::vector<ExpTerm> out;
  for (double rate : forcing_rates(f)) {
    Vec v = forcing_at(f, kind, rate, dim);
    if (v.squaredNorm() > 0.0) out.push_back({v, rate});
  }
  return out;
}

}  // namespace mflq
