#include "mvf/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mvf/util.hpp"

namespace mvf {

TimeGrid::TimeGrid(double t, std::size_t n) : T(t), N(n) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("time grid: T must be positive");
  if (n < 1) throw std::invalid_argument("time grid: N must be >= 1");
}

double TimeGrid::t(std::size_t l) const {
  if (l >= N) return T;
  return T * static_cast<double>(l) / static_cast<double>(N);
}

ScenarioSet ScenarioSet::monte_carlo(std::size_t P, std::uint64_t seed) {
  if (P < 1) throw std::invalid_argument("scenarios: P must be >= 1");
  ScenarioSet s;
  s.mode_ = ScenarioMode::monte_carlo;
  s.P_ = P;
  s.seed_ = seed;
  return s;
}

ScenarioSet ScenarioSet::tree(std::size_t b, std::size_t depth, std::vector<double> bp) {
  if (b < 1 || depth < 1) throw std::invalid_argument("tree: need b >= 1 and depth >= 1");
  if (bp.empty()) bp.assign(b, 1.0 / static_cast<double>(b));
  if (bp.size() != b) throw std::invalid_argument("tree: branch probability count != b");
  double tot = 0.0;
  for (double p : bp) {
    if (!(p > 0.0)) throw std::invalid_argument("tree: branch probabilities must be positive");
    tot += p;
  }
  if (std::abs(tot - 1.0) > 1e-12) throw std::invalid_argument("tree: branch probabilities must sum to 1");
  ScenarioSet s;
  s.mode_ = ScenarioMode::tree;
  s.b_ = b;
  s.depth_ = depth;
  s.bp_ = std::move(bp);
  s.pow_.assign(depth + 1, 1);
  for (std::size_t l = 1; l <= depth; ++l) {
    if (s.pow_[l - 1] > (std::size_t{1} << 24) / b) throw std::invalid_argument("tree: too many leaves");
    s.pow_[l] = s.pow_[l - 1] * b;
  }
  s.P_ = s.pow_[depth];
  s.prob_.resize(s.P_);
  for (std::size_t w = 0; w < s.P_; ++w) {
    double p = 1.0;
    for (std::size_t st = 1; st <= depth; ++st) p *= s.bp_[s.branch(w, st)];
    s.prob_[w] = p;
  }
  return s;
}

double ScenarioSet::probability(std::size_t w) const {
  return is_tree() ? prob_[w] : 1.0 / static_cast<double>(P_);
}

std::size_t ScenarioSet::atom(std::size_t w, std::size_t level) const {
  if (!is_tree()) throw std::logic_error("scenarios: filtration atoms exist only in tree mode");
  return w / pow_[depth_ - std::min(level, depth_)];
}

std::size_t ScenarioSet::atom_count(std::size_t level) const {
  if (!is_tree()) throw std::logic_error("scenarios: filtration atoms exist only in tree mode");
  return pow_[std::min(level, depth_)];
}

std::size_t ScenarioSet::branch(std::size_t w, std::size_t step) const {
  return (w / pow_[depth_ - step]) % b_;
}

std::uint64_t ScenarioSet::scenario_seed(std::size_t w) const {
  return mix64(seed_ ^ mix64(static_cast<std::uint64_t>(w) + 0x632be59bd9b4e019ULL));
}

DriverKind parse_driver_kind(const std::string& s) {
  if (s == "brownian") return DriverKind::brownian;
  if (s == "compound_poisson") return DriverKind::compound_poisson;
  if (s == "fv_drift") return DriverKind::fv_drift;
  if (s == "mixture") return DriverKind::mixture;
  throw std::invalid_argument("unknown driver kind: " + s);
}

std::string to_string(DriverKind k) {
  switch (k) {
    case DriverKind::brownian: return "brownian";
    case DriverKind::compound_poisson: return "compound_poisson";
    case DriverKind::fv_drift: return "fv_drift";
    case DriverKind::mixture: return "mixture";
  }
  return "?";
}

void validate(const DriverSpec& s) {
  auto fin = [](double x) { return std::isfinite(x); };
  if (s.dim < 1) throw std::invalid_argument("driver: dim must be >= 1");
  if (!fin(s.vol) || s.vol < 0) throw std::invalid_argument("driver: vol must be >= 0");
  if (!fin(s.jump_rate) || s.jump_rate < 0) throw std::invalid_argument("driver: jump intensity must be >= 0");
  if (!fin(s.jump_sd) || s.jump_sd < 0) throw std::invalid_argument("driver: jump_sd must be >= 0");
  if (!fin(s.drift) || !fin(s.jump_mean) || !fin(s.s0)) throw std::invalid_argument("driver: non-finite parameter");
  if (!fin(s.c_mix) || s.c_mix <= 0) throw std::invalid_argument("driver: c_mix must be positive");
  if (!fin(s.eps0) || s.eps0 < 0) throw std::invalid_argument("driver: eps0 must be >= 0");
}

namespace {

bool has_bm(DriverKind k) { return k == DriverKind::brownian || k == DriverKind::mixture; }
bool has_drift(DriverKind k) { return k == DriverKind::fv_drift || k == DriverKind::mixture; }
bool has_jumps(DriverKind k) { return k == DriverKind::compound_poisson || k == DriverKind::mixture; }

std::size_t expected_branching(const DriverSpec& s) {
  switch (s.kind) {
    case DriverKind::brownian: return std::size_t{1} << s.dim;
    case DriverKind::compound_poisson: return 2;
    case DriverKind::mixture: return 4;
    case DriverKind::fv_drift: return 0;  // any
  }
  return 0;
}

double tree_jump_prob(const DriverSpec& s, const ScenarioSet& sc) {
  if (s.kind == DriverKind::compound_poisson) return sc.branch_probs()[1];
  if (s.kind == DriverKind::mixture) return sc.branch_probs()[2] + sc.branch_probs()[3];
  return 0.0;
}

void check_tree(const DriverSpec& spec, const TimeGrid& grid, const ScenarioSet& sc) {
  if (sc.depth() != grid.N) throw std::invalid_argument("tree: depth must equal the time grid N");
  std::size_t b = expected_branching(spec);
  if (b != 0 && sc.branching() != b)
    throw std::invalid_argument("tree: branching " + std::to_string(sc.branching()) + " does not fit driver " +
                                to_string(spec.kind));
  if ((spec.kind == DriverKind::compound_poisson || spec.kind == DriverKind::mixture) && spec.dim != 1)
    throw std::invalid_argument("tree: jump drivers are one-dimensional in tree mode");
}

// one scenario: S as (l, i), dA and dJ as (k, i)
void gen(const DriverSpec& spec, const TimeGrid& grid, const ScenarioSet& sc, std::size_t w, std::span<double> s,
         std::span<double> da, std::span<double> dj) {
  const std::size_t N = grid.N, d = spec.dim;
  const double dt = grid.dt(), sdt = std::sqrt(dt);
  for (std::size_t i = 0; i < d; ++i) s[i] = spec.s0;
  const double drift = has_drift(spec.kind) ? spec.drift : 0.0;
  if (sc.is_tree()) {
    const double pj = tree_jump_prob(spec, sc);
    for (std::size_t k = 0; k < N; ++k) {
      std::size_t br = sc.branch(w, k + 1);
      for (std::size_t i = 0; i < d; ++i) {
        double inc = drift * dt, a = drift * dt, jump = 0.0;
        if (spec.kind == DriverKind::brownian) {
          inc += ((br >> i) & 1U ? -1.0 : 1.0) * spec.vol * sdt;
        } else if (spec.kind == DriverKind::mixture) {
          inc += ((br & 1U) ? -1.0 : 1.0) * spec.vol * sdt;
          if (br & 2U) jump = spec.jump_mean;
          a += pj * spec.jump_mean;
        } else if (spec.kind == DriverKind::compound_poisson) {
          if (br == 1) jump = spec.jump_mean;
          a += pj * spec.jump_mean;
        }
        inc += jump;
        s[(k + 1) * d + i] = s[k * d + i] + inc;
        da[k * d + i] = a;
        dj[k * d + i] = jump;
      }
    }
    return;
  }
  std::mt19937_64 rng(sc.scenario_seed(w));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::poisson_distribution<int> pois(spec.jump_rate * dt > 0 ? spec.jump_rate * dt : 1.0);
  const double comp = has_jumps(spec.kind) ? spec.jump_rate * spec.jump_mean * dt : 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      double inc = drift * dt, jump = 0.0;
      if (has_bm(spec.kind) && spec.vol > 0) inc += spec.vol * sdt * gauss(rng);
      if (has_jumps(spec.kind) && spec.jump_rate > 0) {
        int n = pois(rng);
        for (int q = 0; q < n; ++q) jump += spec.jump_mean + spec.jump_sd * gauss(rng);
      }
      inc += jump;
      s[(k + 1) * d + i] = s[k * d + i] + inc;
      da[k * d + i] = drift * dt + comp;
      dj[k * d + i] = jump;
    }
  }
}

}  // namespace

ScenarioSet tree_scenarios(const DriverSpec& spec, const TimeGrid& grid) {
  validate(spec);
  const double dt = grid.dt();
  switch (spec.kind) {
    case DriverKind::brownian: return ScenarioSet::tree(std::size_t{1} << spec.dim, grid.N);
    case DriverKind::fv_drift: return ScenarioSet::tree(2, grid.N);
    case DriverKind::compound_poisson: {
      double p = spec.jump_rate * dt;
      if (!(p > 0 && p < 1)) throw std::invalid_argument("tree: need 0 < jump_rate*dt < 1");
      return ScenarioSet::tree(2, grid.N, {1.0 - p, p});
    }
    case DriverKind::mixture: {
      double p = spec.jump_rate * dt;
      if (!(p > 0 && p < 1)) throw std::invalid_argument("tree: need 0 < jump_rate*dt < 1");
      return ScenarioSet::tree(4, grid.N, {(1 - p) / 2, (1 - p) / 2, p / 2, p / 2});
    }
  }
  throw std::invalid_argument("tree: unknown driver");
}

void simulate_scenario(const DriverSpec& spec, const TimeGrid& grid, const ScenarioSet& sc, std::size_t w,
                       std::span<double> s_out) {
  std::vector<double> da(grid.N * spec.dim), dj(grid.N * spec.dim);
  gen(spec, grid, sc, w, s_out, da, dj);
}

DriverPath simulate_driver(const DriverSpec& spec, const TimeGrid& grid, const ScenarioSet& sc) {
  validate(spec);
  if (sc.is_tree()) check_tree(spec, grid, sc);
  DriverPath p;
  p.spec = spec;
  p.grid = grid;
  p.scenarios = sc;
  const std::size_t P = sc.size(), N = grid.N, d = spec.dim;
  p.S.assign(P * (N + 1) * d, 0.0);
  p.dA.assign(P * N * d, 0.0);
  p.dJ.assign(P * N * d, 0.0);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    for (std::size_t w = b; w < e; ++w) {
      std::span<double> s(p.S.data() + w * (N + 1) * d, (N + 1) * d);
      std::span<double> da(p.dA.data() + w * N * d, N * d);
      std::span<double> dj(p.dJ.data() + w * N * d, N * d);
      gen(spec, grid, sc, w, s, da, dj);
    }
  });
  p.V = control_process(spec, p);
  return p;
}

PathEnsemble fv_variation(const DriverPath& path) {
  const std::size_t P = path.P(), N = path.N(), d = path.d();
  PathEnsemble out(P, N + 1);
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t k = 0; k < N; ++k) {
      double q = 0.0;
      for (std::size_t i = 0; i < d; ++i) q += path.da(w, k, i) * path.da(w, k, i);
      out.at(w, k + 1) = out(w, k) + std::sqrt(q);
    }
  return out;
}

PathEnsemble quadratic_variation(const DriverPath& path) {
  const std::size_t P = path.P(), N = path.N(), d = path.d();
  PathEnsemble out(P, N + 1);
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t k = 0; k < N; ++k) {
      double q = 0.0;
      for (std::size_t i = 0; i < d; ++i) q += path.dm(w, k, i) * path.dm(w, k, i);
      out.at(w, k + 1) = out(w, k) + q;
    }
  return out;
}

// brownian: vol^2 t; fv: Var_t(A) + eps0 t; jumps/mixture: c_mix (vol^2 t + Var_t(A) + lambda E[J^2] t)
PathEnsemble control_process(const DriverSpec& spec, const DriverPath& path) {
  const std::size_t P = path.P(), N = path.N();
  const double dt = path.grid.dt();
  PathEnsemble V(P, N + 1);
  const double v2 = spec.vol * spec.vol;
  if (spec.kind == DriverKind::brownian) {
    for (std::size_t w = 0; w < P; ++w)
      for (std::size_t l = 0; l <= N; ++l) V.at(w, l) = v2 * path.grid.t(l);
    return V;
  }
  PathEnsemble var = fv_variation(path);
  if (spec.kind == DriverKind::fv_drift) {
    for (std::size_t w = 0; w < P; ++w)
      for (std::size_t l = 0; l <= N; ++l) V.at(w, l) = var(w, l) + spec.eps0 * path.grid.t(l);
    return V;
  }
  double lam_j2;
  if (path.scenarios.is_tree())
    lam_j2 = tree_jump_prob(spec, path.scenarios) / dt * spec.jump_mean * spec.jump_mean;
  else
    lam_j2 = spec.jump_rate * (spec.jump_mean * spec.jump_mean + spec.jump_sd * spec.jump_sd);
  const double bm = spec.kind == DriverKind::mixture ? v2 : 0.0;
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t l = 0; l <= N; ++l) {
      double t = path.grid.t(l);
      V.at(w, l) = spec.c_mix * (bm * t + var(w, l) + lam_j2 * t);
    }
  return V;
}

PathEnsemble ito_integral(const PredictablePath& H, const DriverPath& S, const StoppingRule* upto) {
  const std::size_t P = S.P(), N = S.N(), d = S.d();
  if (H.scenarios() != P || H.steps() != N || H.dim() != d)
    throw std::invalid_argument("ito_integral: grid mismatch");
  if (upto && upto->size() != P) throw std::invalid_argument("ito_integral: stopping rule size mismatch");
  PathEnsemble Z(P, N + 1);
  for (std::size_t w = 0; w < P; ++w) {
    const std::size_t tau = upto ? (*upto)[w] : kNever;
    double acc = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      if (before_tau(k, tau)) {
        double inc = 0.0;
        for (std::size_t i = 0; i < d; ++i) inc += H(w, k, i) * S.ds(w, k, i);
        acc += inc;
      }
      Z.at(w, k + 1) = acc;
    }
  }
  return Z;
}

PathEnsemble d_process(const PredictablePath& H, const PathEnsemble& A) {
  const std::size_t P = H.scenarios(), N = H.steps(), d = H.dim();
  if (A.scenarios() != P || A.length() != N + 1) throw std::invalid_argument("d_process: grid mismatch");
  PathEnsemble D(P, N + 1);
  for (std::size_t w = 0; w < P; ++w) {
    double acc = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      double dA = A(w, k + 1) - A(w, k);
      if (dA < 0) throw std::invalid_argument("d_process: A decreases at scenario " + std::to_string(w));
      double h2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) h2 += H(w, k, i) * H(w, k, i);
      acc += h2 * dA;
      D.at(w, k + 1) = acc;
    }
  }
  return D;
}

double v_tau_minus(const PathEnsemble& V, std::size_t w, std::size_t tau) {
  const std::size_t N = V.length() - 1;
  if (tau == kNever) return V(w, N);
  if (tau == 0) return 0.0;  // nothing happens strictly before time 0
  return V(w, std::min(tau, N + 1) - 1);
}

double MuWeights::total() const {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

MuWeights mu_weights(const StoppingRule& tau, const PathEnsemble& V, const ScenarioSet& sc) {
  const std::size_t P = V.scenarios(), N = V.length() - 1;
  if (tau.size() != P || sc.size() != P) throw std::invalid_argument("mu_weights: size mismatch");
  MuWeights mu{P, N, std::vector<double>(P * N, 0.0)};
  for (std::size_t w = 0; w < P; ++w) {
    const double vt = v_tau_minus(V, w, tau[w]), p = sc.probability(w);
    for (std::size_t k = 0; k < N; ++k) {
      double dv = V(w, k + 1) - V(w, k);
      if (dv < 0) throw std::invalid_argument("mu_weights: V decreases");
      if (before_tau(k, tau[w])) mu.w[w * N + k] = p * vt * dv;
    }
  }
  return mu;
}

double l2_mu_sq(const PredictablePath& H, const MuWeights& mu) {
  if (H.scenarios() != mu.P || H.steps() != mu.N) throw std::invalid_argument("l2_mu: size mismatch");
  double s = 0.0;
  for (std::size_t w = 0; w < mu.P; ++w)
    for (std::size_t k = 0; k < mu.N; ++k) {
      double m = mu(w, k);
      if (m == 0.0) continue;
      double h2 = 0.0;
      for (std::size_t i = 0; i < H.dim(); ++i) h2 += H(w, k, i) * H(w, k, i);
      s += m * h2;
    }
  return s;
}

double v_tau_l2(const PathEnsemble& V, const StoppingRule& tau, const ScenarioSet& sc) {
  double s = 0.0;
  for (std::size_t w = 0; w < V.scenarios(); ++w) {
    double v = v_tau_minus(V, w, tau[w]);
    s += sc.probability(w) * v * v;
  }
  return std::sqrt(s);
}

double r2_norm(const PathEnsemble& Z, const ScenarioSet& sc) {
  double s = 0.0;
  for (std::size_t w = 0; w < Z.scenarios(); ++w) {
    double m = 0.0;
    for (double x : Z.row(w)) m = std::max(m, x * x);
    s += sc.probability(w) * m;
  }
  return std::sqrt(s);
}

std::vector<StoppingRule> localizing_sequence(const PathEnsemble& V, const PathEnsemble* extra,
                                              const std::vector<double>& levels) {
  const std::size_t P = V.scenarios(), L = V.length();
  if (extra && (extra->scenarios() != P || extra->length() != L))
    throw std::invalid_argument("localizing_sequence: extra path mismatch");
  std::vector<StoppingRule> out;
  for (double M : levels) {
    StoppingRule r = StoppingRule::never(P);
    for (std::size_t w = 0; w < P; ++w)
      for (std::size_t l = 0; l < L; ++l)
        if (V(w, l) >= M || (extra && (*extra)(w, l) >= M)) {
          r.tau[w] = l;
          break;
        }
    out.push_back(std::move(r));
  }
  return out;
}

bool is_stopping_rule(const StoppingRule& tau, const ScenarioSet& sc) {
  if (!sc.is_tree()) return true;
  const std::size_t D = sc.depth();
  for (std::size_t l = 0; l <= D; ++l) {
    std::vector<int> seen(sc.atom_count(l), -1);
    for (std::size_t w = 0; w < sc.size(); ++w) {
      int ind = (tau[w] != kNever && tau[w] <= l) ? 1 : 0;
      int& s = seen[sc.atom(w, l)];
      if (s == -1) s = ind;
      else if (s != ind) return false;
    }
  }
  return true;
}

bool is_adapted(const DriverPath& path) {
  const auto& sc = path.scenarios;
  if (!sc.is_tree()) return true;
  const std::size_t N = path.N(), d = path.d();
  for (std::size_t l = 0; l <= N; ++l) {
    std::vector<std::size_t> rep(sc.atom_count(l), kNever);
    for (std::size_t w = 0; w < path.P(); ++w) {
      std::size_t& r = rep[sc.atom(w, l)];
      if (r == kNever) { r = w; continue; }
      for (std::size_t i = 0; i < d; ++i)
        if (path.s(w, l, i) != path.s(r, l, i)) return false;
    }
  }
  return true;
}

bool is_predictable(const PredictablePath& H, const ScenarioSet& sc) {
  if (!sc.is_tree()) return true;
  for (std::size_t k = 0; k < H.steps(); ++k) {
    std::vector<std::size_t> rep(sc.atom_count(k), kNever);
    for (std::size_t w = 0; w < H.scenarios(); ++w) {
      std::size_t& r = rep[sc.atom(w, k)];
      if (r == kNever) { r = w; continue; }
      for (std::size_t i = 0; i < H.dim(); ++i)
        if (H(w, k, i) != H(r, k, i)) return false;
    }
  }
  return true;
}

VerySimple random_very_simple(std::size_t N, std::size_t d, std::mt19937_64& rng) {
  VerySimple v;
  v.N = N;
  v.d = d;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t k = 0; k < N * d; ++k) v.h.push_back(U(rng));
  for (std::size_t k = 0; k < N; ++k)
    v.threshold.push_back(coin(rng) ? std::nan("") : 0.5 * U(rng));
  return v;
}

PredictablePath materialize(const VerySimple& H, const DriverPath& path) {
  if (H.N != path.N() || H.d != path.d()) throw std::invalid_argument("very simple: grid mismatch");
  PredictablePath out(path.P(), H.N, H.d);
  for (std::size_t w = 0; w < path.P(); ++w)
    for (std::size_t k = 0; k < H.N; ++k) {
      double th = H.threshold[k];
      bool in = std::isnan(th) || path.s(w, k, 0) - path.spec.s0 >= th;
      if (!in) continue;
      for (std::size_t i = 0; i < H.d; ++i) out.at(w, k, i) = H.h[k * H.d + i];
    }
  return out;
}

ControlReport control_inequality_check(const DriverPath& S, const PathEnsemble& V, const PredictablePath& H,
                                       const StoppingRule& tau) {
  const std::size_t P = S.P(), N = S.N(), d = S.d();
  const auto& sc = S.scenarios;
  std::vector<double> diff(P), lhs(P), rhs(P);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    for (std::size_t w = b; w < e; ++w) {
      double acc = 0.0, mx = 0.0, D = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        if (!before_tau(k, tau[w])) break;
        double inc = 0.0, h2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          inc += H(w, k, i) * S.ds(w, k, i);
          h2 += H(w, k, i) * H(w, k, i);
        }
        acc += inc;
        mx = std::max(mx, acc * acc);
        D += h2 * (V(w, k + 1) - V(w, k));
      }
      lhs[w] = mx;
      rhs[w] = v_tau_minus(V, w, tau[w]) * D;
      diff[w] = rhs[w] - lhs[w];
    }
  });
  ControlReport r;
  double m2 = 0.0;
  for (std::size_t w = 0; w < P; ++w) {
    double p = sc.probability(w);
    r.lhs += p * lhs[w];
    r.rhs += p * rhs[w];
  }
  r.margin = r.rhs - r.lhs;
  if (!sc.is_tree() && P > 1) {
    for (std::size_t w = 0; w < P; ++w) m2 += (diff[w] - r.margin) * (diff[w] - r.margin);
    r.se = std::sqrt(m2 / static_cast<double>(P - 1) / static_cast<double>(P));
  }
  return r;
}

std::vector<ControlReport> control_inequality_check(const DriverPath& S, const PathEnsemble& V,
                                                    const std::vector<PredictablePath>& family,
                                                    const StoppingRule& tau) {
  std::vector<ControlReport> out;
  for (const auto& H : family) out.push_back(control_inequality_check(S, V, H, tau));
  return out;
}

std::string to_csv(const DriverPath& path) {
  std::ostringstream os;
  os << "scenario,l,t";
  for (std::size_t i = 0; i < path.d(); ++i) os << ",S" << i;
  os << ",V\n";
  for (std::size_t w = 0; w < path.P(); ++w)
    for (std::size_t l = 0; l <= path.N(); ++l) {
      os << w << ',' << l << ',' << fmt_num(path.grid.t(l));
      for (std::size_t i = 0; i < path.d(); ++i) os << ',' << fmt_num(path.s(w, l, i));
      os << ',' << fmt_num(path.V(w, l)) << '\n';
    }
  return os.str();
}

}  // namespace mvf
