#include "mflq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "mflq/errors.hpp"

namespace mflq {

namespace {

Vec eval(const std::vector<ExpTerm>& terms, double t, Eigen::Index dim) {
  Vec v = Vec::Zero(dim);
  for (const ExpTerm& e : terms) v += e.v * std::exp(-e.rate * t);
  return v;
}

struct CostData {
  Mat Q, Qbar, S, Sbar, R, Rbar;
  std::vector<ExpTerm> q, rho;
};

struct Model {
  Eigen::Index n = 0, m = 0;
  Mat A, Abar, C, Cbar, B, Bbar, D, Dbar;
  std::vector<ExpTerm> b, sigma;
  std::vector<CostData> costs;
  bool zero_sum = false;
};

CostData cost_of(const LqSpec& s) {
  return {s.Q, s.Qbar, s.S, s.Sbar, s.R, s.Rbar, forcing_of(s.forcing, ForcingKind::q1, s.n),
          forcing_of(s.forcing, ForcingKind::rho1, s.m())};
}

Model model_of(const LqSpec& s) {
  Model md{s.n, s.m(), s.A, s.Abar, s.C, s.Cbar, s.B, s.Bbar, s.D, s.Dbar,
           forcing_of(s.forcing, ForcingKind::b, s.n), forcing_of(s.forcing, ForcingKind::sigma, s.n),
           {cost_of(s)}, true};
  return md;
}

Model model_of(const GameSpec& g) {
  Model md{g.n, g.m(), g.A, g.Abar, g.C, g.Cbar, g.B, g.Bbar, g.D, g.Dbar,
           forcing_of(g.forcing, ForcingKind::b, g.n), forcing_of(g.forcing, ForcingKind::sigma, g.n),
           {}, false};
  for (int i = 1; i <= g.players; ++i) md.costs.push_back(cost_of(player_view(g, i)));
  return md;
}

void check_strategy(const Model& md, const FeedbackStrategy& st) {
  if (st.Theta.rows() != md.m || st.Theta.cols() != md.n || st.ThetaBar.rows() != md.m ||
      st.ThetaBar.cols() != md.n)
    throw Error(Errc::DimensionMismatch, "strategy gains must be m x n");
  for (const ExpTerm& e : st.offset)
    if (e.v.size() != md.m) throw Error(Errc::DimensionMismatch, "strategy offset must have length m");
}

int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MFLQ_THREADS")) {
    const int k = std::atoi(env);
    if (k > 0) return k;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Row-major copies for the allocation-free inner loop.
struct Dense {
  std::vector<double> a;
  Eigen::Index rows = 0, cols = 0;
  Dense() = default;
  explicit Dense(const Mat& M) : a(M.size()), rows(M.rows()), cols(M.cols()) {
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) a[i * cols + j] = M(i, j);
  }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a[i * cols + j]; }
};

// Along a path u = Theta X + g_k, so each player's running cost is X'QTh X + 2 X'l_k + c_k and
// the Euler step is X + (ATh X + a_k) dt + (CTh X + e_k) dW.
struct Precomputed {
  int steps = 0;
  double dt = 0.0;
  Dense ATh, CTh;
  std::vector<Dense> QTh;
  std::vector<double> a, e;                 // steps+1 blocks of n
  std::vector<std::vector<double>> l, c;    // per player
  std::vector<Vec> mean;
};

Precomputed precompute(const Model& md, const FeedbackStrategy& st, const Vec& x0, int steps,
                       double dt) {
  const Eigen::Index n = md.n;
  const Mat& Th = st.Theta;
  const Mat& Tb = st.ThetaBar;
  const Mat Bh = md.B + md.Bbar, Dh = md.D + md.Dbar;
  const Mat ATh = md.A + md.B * Th, CTh = md.C + md.D * Th;
  const Mat Acl = md.A + md.Abar + Bh * Tb, Ccl = md.C + md.Cbar + Dh * Tb;

  Precomputed pc;
  pc.steps = steps;
  pc.dt = dt;
  pc.ATh = Dense(ATh);
  pc.CTh = Dense(CTh);
  pc.mean.resize(steps + 1);
  // Exact mean ODE by RK4 on the simulation grid.
  auto f = [&](double t, const Vec& x) -> Vec {
    return Acl * x + Bh * eval(st.offset, t, md.m) + eval(md.b, t, n);
  };
  Vec x = x0;
  pc.mean[0] = x;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Vec k1 = f(t, x), k2 = f(t + dt / 2, x + dt / 2 * k1), k3 = f(t + dt / 2, x + dt / 2 * k2),
              k4 = f(t + dt, x + dt * k3);
    x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    pc.mean[k + 1] = x;
  }

  pc.a.resize((steps + 1) * n);
  pc.e.resize((steps + 1) * n);
  const std::size_t P = md.costs.size();
  pc.l.assign(P, std::vector<double>((steps + 1) * n));
  pc.c.assign(P, std::vector<double>(steps + 1));
  for (const CostData& cd : md.costs)
    pc.QTh.emplace_back(cd.Q + cd.S.transpose() * Th + Th.transpose() * cd.S + Th.transpose() * cd.R * Th);
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    const Vec& xb = pc.mean[k];
    const Vec v = eval(st.offset, t, md.m);
    const Vec ak = (Acl - ATh) * xb + Bh * v + eval(md.b, t, n);
    const Vec ek = (Ccl - CTh) * xb + Dh * v + eval(md.sigma, t, n);
    const Vec g = (Tb - Th) * xb + v;
    const Vec ubar = Tb * xb + v;
    std::copy(ak.data(), ak.data() + n, pc.a.begin() + k * n);
    std::copy(ek.data(), ek.data() + n, pc.e.begin() + k * n);
    for (std::size_t i = 0; i < P; ++i) {
      const CostData& cd = md.costs[i];
      const Vec q = eval(cd.q, t, n), rho = eval(cd.rho, t, md.m);
      const Vec lk = cd.S.transpose() * g + Th.transpose() * (cd.R * g + rho) + q;
      std::copy(lk.data(), lk.data() + n, pc.l[i].begin() + k * n);
      pc.c[i][k] = g.dot(cd.R * g) + 2 * rho.dot(g) + xb.dot(cd.Qbar * xb) + 2 * ubar.dot(cd.Sbar * xb) +
                   ubar.dot(cd.Rbar * ubar);
    }
  }
  return pc;
}

struct PathWork {
  std::vector<double> x, y;
};

double running_cost(const Precomputed& pc, std::size_t i, int k, const double* x, Eigen::Index n) {
  const Dense& Q = pc.QTh[i];
  const double* l = pc.l[i].data() + k * n;
  double s = pc.c[i][k];
  for (Eigen::Index r = 0; r < n; ++r) {
    double row = 0;
    for (Eigen::Index j = 0; j < n; ++j) row += Q(r, j) * x[j];
    s += x[r] * (row + 2 * l[r]);
  }
  return s;
}

void euler_step(const Precomputed& pc, int k, double dW, double* x, double* tmp, Eigen::Index n) {
  const double* a = pc.a.data() + k * n;
  const double* e = pc.e.data() + k * n;
  for (Eigen::Index r = 0; r < n; ++r) {
    double drift = a[r], diff = e[r];
    for (Eigen::Index j = 0; j < n; ++j) {
      drift += pc.ATh(r, j) * x[j];
      diff += pc.CTh(r, j) * x[j];
    }
    tmp[r] = x[r] + drift * pc.dt + diff * dW;
  }
  std::copy(tmp, tmp + n, x);
}

std::vector<int> record_indices(int steps, int points) {
  points = std::clamp(points, 2, steps + 1);
  std::vector<int> idx(points);
  for (int r = 0; r < points; ++r)
    idx[r] = static_cast<int>(std::llround(static_cast<double>(r) * steps / (points - 1)));
  return idx;
}

PathEnsemble simulate(const Model& md, const FeedbackStrategy& st, const Vec& x0, const SimOptions& o) {
  check_strategy(md, st);
  if (x0.size() != md.n) throw Error(Errc::DimensionMismatch, "x0 must have length n");
  if (!(o.T > 0) || !(o.dt > 0) || o.paths < 2)
    throw Error(Errc::DimensionMismatch, "simulation needs T > 0, dt > 0, paths >= 2");
  const double ratio = o.T / o.dt;
  const int steps = static_cast<int>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
    throw Error(Errc::DimensionMismatch, "T / dt must be an integer");

  const Eigen::Index n = md.n;
  const Precomputed pc = precompute(md, st, x0, steps, o.dt);
  const std::vector<int> rec = record_indices(steps, o.record_points);
  const int tail_start = static_cast<int>(std::llround(0.9 * steps));
  const std::size_t P = md.costs.size();

  PathEnsemble ens;
  ens.opts = o;
  ens.steps = steps;
  ens.n = md.n;
  ens.m = md.m;
  ens.zero_sum = md.zero_sum;
  for (int k : rec) {
    ens.t.push_back(k * o.dt);
    ens.mean.push_back(pc.mean[k]);
  }
  ens.states.assign(o.paths, std::vector<Vec>(rec.size()));
  ens.costs.assign(P, std::vector<double>(o.paths));
  ens.tail.assign(P, std::vector<double>(o.paths));

  // A stream is one path, or one antithetic pair sharing its increments with opposite signs.
  const int width = o.antithetic ? 2 : 1;
  const int streams = (o.paths + width - 1) / width;
  const double sqdt = std::sqrt(o.dt);
  std::vector<double> blowup(streams, std::numeric_limits<double>::infinity());

  auto run_stream = [&](int s) {
    const std::uint64_t id = static_cast<std::uint64_t>(s);
    std::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(o.seed >> 32),
                      static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
    std::mt19937_64 eng(seq);
    std::normal_distribution<double> normal;
    const int first = s * width;
    const int count = std::min(width, o.paths - first);
    std::vector<double> x(count * n), tmp(n);
    std::vector<double> acc(count * P, 0.0), tail(count * P, 0.0), prev(count * P);
    for (int p = 0; p < count; ++p) std::copy(x0.data(), x0.data() + n, x.begin() + p * n);
    std::size_t next_rec = 0;
    auto record = [&](int k) {
      while (next_rec < rec.size() && rec[next_rec] == k) {
        for (int p = 0; p < count; ++p)
          ens.states[first + p][next_rec] = Eigen::Map<const Vec>(x.data() + p * n, n);
        ++next_rec;
      }
    };
    for (int p = 0; p < count; ++p)
      for (std::size_t i = 0; i < P; ++i) prev[p * P + i] = running_cost(pc, i, 0, x.data() + p * n, n);
    record(0);
    for (int k = 0; k < steps; ++k) {
      const double dW = sqdt * normal(eng);
      for (int p = 0; p < count; ++p) {
        double* xp = x.data() + p * n;
        euler_step(pc, k, p == 0 ? dW : -dW, xp, tmp.data(), n);
        bool finite = true;
        for (Eigen::Index r = 0; r < n; ++r) finite = finite && std::isfinite(xp[r]) && std::abs(xp[r]) < 1e150;
        if (!finite) {
          blowup[s] = (k + 1) * o.dt;
          return;
        }
        for (std::size_t i = 0; i < P; ++i) {
          const double cur = running_cost(pc, i, k + 1, xp, n);
          const double piece = 0.5 * o.dt * (prev[p * P + i] + cur);
          acc[p * P + i] += piece;
          if (k >= tail_start) tail[p * P + i] += piece;
          prev[p * P + i] = cur;
        }
      }
      record(k + 1);
    }
    for (int p = 0; p < count; ++p)
      for (std::size_t i = 0; i < P; ++i) {
        ens.costs[i][first + p] = acc[p * P + i];
        ens.tail[i][first + p] = tail[p * P + i];
      }
  };

  const int nt = std::min(thread_count(o.threads), streams);
  if (nt <= 1) {
    for (int s = 0; s < streams; ++s) run_stream(s);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (int s = w; s < streams; s += nt) run_stream(s);
      });
    for (std::thread& t : pool) t.join();
  }
  const double first_blowup = *std::min_element(blowup.begin(), blowup.end());
  if (std::isfinite(first_blowup))
    throw Error(Errc::NonFiniteState, "path blow-up at t=" + std::to_string(first_blowup));
  return ens;
}

// Mean and standard error over independent samples: antithetic pairs are averaged first.
std::pair<double, double> stats(const std::vector<double>& v, bool antithetic) {
  const std::size_t N = v.size();
  double total = 0;
  for (double x : v) total += x;
  const double mean = total / static_cast<double>(N);
  std::vector<double> samples;
  if (antithetic) {
    for (std::size_t k = 0; k + 1 < N; k += 2) samples.push_back(0.5 * (v[k] + v[k + 1]));
    if (N % 2) samples.push_back(v.back());
  } else {
    samples = v;
  }
  const std::size_t S = samples.size();
  if (S < 2) return {mean, 0.0};
  double smean = 0;
  for (double x : samples) smean += x;
  smean /= static_cast<double>(S);
  double ss = 0;
  for (double x : samples) ss += (x - smean) * (x - smean);
  return {mean, std::sqrt(ss / static_cast<double>(S - 1) / static_cast<double>(S))};
}

std::vector<double> player_costs(const PathEnsemble& e, const std::vector<std::vector<double>>& src,
                                 int player) {
  if (player != 1 && player != 2) throw Error(Errc::DimensionMismatch, "player must be 1 or 2");
  if (e.zero_sum) {
    std::vector<double> v = src.at(0);
    if (player == 2)
      for (double& x : v) x = -x;
    return v;
  }
  if (static_cast<std::size_t>(player) > src.size())
    throw Error(Errc::DimensionMismatch, "ensemble has no cost for player " + std::to_string(player));
  return src[player - 1];
}

FeedbackStrategy perturbed(const FeedbackStrategy& st, const Perturbation& p, int m1, int m) {
  FeedbackStrategy out = st;
  Vec v = Vec::Zero(m);
  v.segment(p.player == 1 ? 0 : m1, p.amplitude.size()) = p.amplitude;
  out.offset.push_back({v, p.rate});
  return out;
}

DeviationReport deviation(const Model& md, int m1, const FeedbackStrategy& st, const Vec& x0,
                          DeviationKind kind, const std::vector<Perturbation>& perts, const SimOptions& opts) {
  SimOptions o = opts;
  o.record_points = 2;
  const PathEnsemble base = simulate(md, st, x0, o);
  DeviationReport rep;
  rep.kind = kind;
  rep.pass = true;
  for (const Perturbation& p : perts) {
    const int mi = p.player == 1 ? m1 : static_cast<int>(md.m) - m1;
    if (p.amplitude.size() != mi)
      throw Error(Errc::DimensionMismatch, "perturbation amplitude must have length m_i");
    const PathEnsemble pe = simulate(md, perturbed(st, p, m1, static_cast<int>(md.m)), x0, o);
    // Saddle: the shared cost J; Nash: the deviating player's own cost.
    const int who = kind == DeviationKind::saddle ? 1 : p.player;
    const std::vector<double> c0 = player_costs(base, base.costs, who);
    const std::vector<double> c1 = player_costs(pe, pe.costs, who);
    std::vector<double> d(c0.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = c1[k] - c0[k];
    const auto [mean, se] = stats(d, o.antithetic);
    DeviationOutcome out{p, mean, se, false};
    if (kind == DeviationKind::saddle && p.player == 2)
      out.pass = mean <= 3 * se;
    else
      out.pass = mean >= -3 * se;
    rep.pass = rep.pass && out.pass;
    rep.outcomes.push_back(out);
  }
  return rep;
}

}  // namespace

PathEnsemble simulate_closed_loop(const LqSpec& s, const FeedbackStrategy& st, const Vec& x0,
                                  const SimOptions& opts) {
  return simulate(model_of(s), st, x0, opts);
}

PathEnsemble simulate_closed_loop(const GameSpec& g, const FeedbackStrategy& st, const Vec& x0,
                                  const SimOptions& opts) {
  return simulate(model_of(g), st, x0, opts);
}

CostEstimate estimate_cost(const PathEnsemble& e, int player) {
  const std::vector<double> c = player_costs(e, e.costs, player);
  const std::vector<double> tl = player_costs(e, e.tail, player);
  const auto [mean, se] = stats(c, e.opts.antithetic);
  double tail = 0;
  for (double x : tl) tail += x;
  tail /= static_cast<double>(tl.size());
  CostEstimate out;
  out.mean = mean;
  out.stderr_ = se;
  out.T = e.opts.T;
  out.dt = e.opts.dt;
  out.paths = e.opts.paths;
  out.tail_flag = std::abs(tail) > 0.01 * std::abs(mean);
  return out;
}

CostEstimate estimate_cost(const PathEnsemble& e, const LqSpec& s, const FeedbackStrategy& st, int player) {
  if (e.n != s.n || e.m != s.m() || !e.zero_sum) throw Error(Errc::DimensionMismatch, "ensemble does not match spec");
  check_strategy(model_of(s), st);
  return estimate_cost(e, player);
}

CostEstimate estimate_cost(const PathEnsemble& e, const GameSpec& g, const FeedbackStrategy& st, int player) {
  if (e.n != g.n || e.m != g.m() || e.zero_sum) throw Error(Errc::DimensionMismatch, "ensemble does not match spec");
  check_strategy(model_of(g), st);
  return estimate_cost(e, player);
}

double moment_cost(const LqSpec& s, const FeedbackStrategy& st, const Vec& x0, double T, double dt) {
  const Model md = model_of(s);
  check_strategy(md, st);
  const Eigen::Index n = s.n;
  const Mat& Th = st.Theta;
  const Mat& Tb = st.ThetaBar;
  const LqHat h = hat(s);
  const Mat ATh = s.A + s.B * Th, CTh = s.C + s.D * Th;
  const Mat Acl = h.A + h.B * Tb, Ccl = h.C + h.D * Tb;
  const Mat QTh = s.Q + s.S.transpose() * Th + Th.transpose() * s.S + Th.transpose() * s.R * Th;
  const CostData& cd = md.costs[0];
  struct State {
    Vec m;
    Mat V;
    double J;
  };
  auto f = [&](double t, const State& y) {
    const Vec v = eval(st.offset, t, s.m());
    const Vec ub = Tb * y.m + v;
    const Vec hv = Ccl * y.m + h.D * v + eval(md.sigma, t, n);
    State d;
    d.m = Acl * y.m + h.B * v + eval(md.b, t, n);
    d.V = ATh * y.V + y.V * ATh.transpose() + CTh * y.V * CTh.transpose() + hv * hv.transpose();
    d.J = (QTh * y.V).trace() + y.m.dot(h.Q * y.m) + 2 * ub.dot(h.S * y.m) + ub.dot(h.R * ub) +
          2 * eval(cd.q, t, n).dot(y.m) + 2 * eval(cd.rho, t, s.m()).dot(ub);
    return d;
  };
  auto axpy = [](const State& y, double c, const State& k) { return State{y.m + c * k.m, y.V + c * k.V, y.J + c * k.J}; };
  State y{x0, Mat::Zero(n, n), 0.0};
  const int steps = std::max(1, static_cast<int>(std::llround(T / dt)));
  const double hstep = T / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = k * hstep;
    const State k1 = f(t, y), k2 = f(t + hstep / 2, axpy(y, hstep / 2, k1)),
                k3 = f(t + hstep / 2, axpy(y, hstep / 2, k2)), k4 = f(t + hstep, axpy(y, hstep, k3));
    y.m += hstep / 6 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m);
    y.V += hstep / 6 * (k1.V + 2 * k2.V + 2 * k3.V + k4.V);
    y.J += hstep / 6 * (k1.J + 2 * k2.J + 2 * k3.J + k4.J);
  }
  return y.J;
}

std::vector<Perturbation> default_perturbations(int m1, int m2) {
  std::vector<Perturbation> out;
  for (int player = 1; player <= 2; ++player) {
    const int mi = player == 1 ? m1 : m2;
    if (mi == 0) continue;
    for (double amp : {0.5, -0.5})
      for (double rate : {0.5, 1.0, 2.0}) out.push_back({player, Vec::Constant(mi, amp), rate});
  }
  return out;
}

DeviationReport deviation_test(const LqSpec& s, const FeedbackStrategy& st, const Vec& x0, DeviationKind kind,
                               const std::vector<Perturbation>& perturbations, const SimOptions& opts) {
  return deviation(model_of(s), s.m1, st, x0, kind, perturbations, opts);
}

DeviationReport deviation_test(const GameSpec& g, const FeedbackStrategy& st, const Vec& x0, DeviationKind kind,
                               const std::vector<Perturbation>& perturbations, const SimOptions& opts) {
  return deviation(model_of(g), g.m1, st, x0, kind, perturbations, opts);
}

}  // namespace mflq
