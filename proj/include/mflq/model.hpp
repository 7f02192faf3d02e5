#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mflq/linops.hpp"

namespace mflq {

inline constexpr double kTauSym = 1e-9;

// f(t) = amplitude * exp(-rate * t). For single-cost data (control, zero-sum) the
// slots q1 and rho1 carry q and rho.
enum class ForcingKind { b, sigma, q1, q2, rho1, rho2 };

struct ForcingTerm {
  ForcingKind kind = ForcingKind::b;
  Vec amplitude;
  double rate = 1.0;
};

using Forcing = std::vector<ForcingTerm>;

const char* to_string(ForcingKind k);
ForcingKind forcing_kind_from(const std::string& s);

// Per-player cost blocks exactly as a problem file lists them.
struct RawPlayer {
  Mat Q, Qbar, S1, S1bar, S2, S2bar, R11, R11bar, R12, R12bar, R22, R22bar;
};

struct RawGame {
  int n = 0, m1 = 0, m2 = 0;
  Mat A, Abar, C, Cbar;
  Mat B1, B1bar, D1, D1bar, B2, B2bar, D2, D2bar;
  std::vector<RawPlayer> players;  // one or two
  Forcing forcing;
};

// Stacked cost of one player over the joint control u = (u1, u2):
// S is m x n with rows (S_i1; S_i2), R is the symmetric m x m block matrix.
struct PlayerCost {
  Mat Q, Qbar, S, Sbar, R, Rbar;
};

struct GameSpec {
  int n = 0, m1 = 0, m2 = 0;
  int players = 2;
  Mat A, Abar, C, Cbar;
  Mat B, Bbar, D, Dbar;  // n x m, columns (player 1 | player 2)
  std::array<PlayerCost, 2> cost;
  Forcing forcing;
  int m() const { return m1 + m2; }
};

// Single cost functional over joint control of dimension m = m1 + m2. Serves as the
// control problem (m2 = 0) and as the shared data of a zero-sum game.
struct LqSpec {
  int n = 0, m1 = 0, m2 = 0;
  Mat A, Abar, C, Cbar, B, Bbar, D, Dbar;
  Mat Q, Qbar, S, Sbar, R, Rbar;
  Forcing forcing;  // kinds b, sigma, q1, rho1
  int m() const { return m1 + m2; }
};
using ControlSpec = LqSpec;
using ZeroSumSpec = LqSpec;

struct LqHat {
  Mat A, B, C, D, Q, S, R;
};

struct HatCoefficients {
  Mat A, B, C, D;
  std::array<LqHat, 2> player;  // only Q, S, R are filled per player
};

// v*(t) = sum_k v_k exp(-rate_k t).
struct ExpTerm {
  Vec v;
  double rate = 1.0;
};

struct FeedbackStrategy {
  Mat Theta, ThetaBar;
  std::vector<ExpTerm> offset;
};

GameSpec validate(const RawGame& raw);
RawGame to_raw(const GameSpec& g);

LqHat hat(const LqSpec& s);
HatCoefficients hat(const GameSpec& g);

// Player 1's cost as a single-cost problem over the joint control (m2 kept).
LqSpec control_spec(const GameSpec& g);
// Dynamics plus player i's cost; forcing q_i, rho_i mapped to the q1, rho1 slots.
LqSpec player_view(const GameSpec& g, int player);
// Throws NotZeroSum unless every cost block and forcing of player 2 is minus player 1's.
ZeroSumSpec zero_sum_reduce(const GameSpec& g);
GameSpec game_from_zero_sum(const ZeroSumSpec& z);

struct ClosedLoopCoefficients {
  Mat A, Abar, C, Cbar;         // A_Theta, Abar_Theta, C_Theta, Cbar_Theta
  Mat Q, Qbar, S, Sbar, R, Rbar;
  Mat Ahat, Chat, Qhat, Shat;
  std::vector<ExpTerm> q;       // q + ThetaBar^T rho (deterministic forcing)
};

ClosedLoopCoefficients closed_loop_transform(const LqSpec& s, const FeedbackStrategy& st);

bool intrinsically_same(const FeedbackStrategy& s1, const FeedbackStrategy& s2, const Mat& B,
                        const Mat& Bbar, const Mat& D, const Mat& Dbar, double tau = 1e-9);
bool intrinsically_same(const FeedbackStrategy& s1, const FeedbackStrategy& s2, const GameSpec& g,
                        double tau = 1e-9);

// Forcing amplitudes of one kind summed per rate, in increasing rate order.
std::vector<ExpTerm> forcing_of(const Forcing& f, ForcingKind kind, Eigen::Index dim);
// Sorted distinct rates appearing anywhere in the forcing.
std::vector<double> forcing_rates(const Forcing& f);
// Amplitude of one kind at one rate (zero vector if absent).
Vec forcing_at(const Forcing& f, ForcingKind kind, double rate, Eigen::Index dim);

}  // namespace mflq
