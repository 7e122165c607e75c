#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mvf {

struct TimeGrid {
  double T = 1.0;
  std::size_t N = 1;

  TimeGrid() = default;
  TimeGrid(double t, std::size_t n);
  double t(std::size_t l) const;
  double dt() const { return T / static_cast<double>(N); }
  bool operator==(const TimeGrid&) const = default;
};

enum class ScenarioMode { monte_carlo, tree };

// Tree scenarios are the leaves of a b-ary tree of depth N, indexed so that the
// first step is the most significant base-b digit; the F_{t_l} atom of a leaf is
// its index divided by b^{depth-l}.
class ScenarioSet {
 public:
  static ScenarioSet monte_carlo(std::size_t P, std::uint64_t seed);
  static ScenarioSet tree(std::size_t b, std::size_t depth, std::vector<double> branch_prob = {});

  ScenarioMode mode() const { return mode_; }
  bool is_tree() const { return mode_ == ScenarioMode::tree; }
  std::size_t size() const { return P_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t branching() const { return b_; }
  std::size_t depth() const { return depth_; }
  const std::vector<double>& branch_probs() const { return bp_; }

  double probability(std::size_t w) const;
  std::size_t atom(std::size_t w, std::size_t level) const;
  std::size_t atom_count(std::size_t level) const;
  // base-b digit of the leaf at step 1..depth
  std::size_t branch(std::size_t w, std::size_t step) const;
  std::uint64_t scenario_seed(std::size_t w) const;

 private:
  ScenarioMode mode_ = ScenarioMode::monte_carlo;
  std::size_t P_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t b_ = 0, depth_ = 0;
  std::vector<double> bp_;
  std::vector<double> prob_;
  std::vector<std::size_t> pow_;
};

enum class DriverKind { brownian, compound_poisson, fv_drift, mixture };

DriverKind parse_driver_kind(const std::string& s);
std::string to_string(DriverKind k);

// brownian: vol*W; fv_drift: drift*t; compound_poisson: jumps at rate jump_rate
// with N(jump_mean, jump_sd^2) sizes; mixture: all three. Components independent.
struct DriverSpec {
  DriverKind kind = DriverKind::brownian;
  std::size_t dim = 1;
  double vol = 1.0;
  double drift = 0.0;
  double jump_rate = 0.0;
  double jump_mean = 0.0;
  double jump_sd = 0.0;
  double s0 = 0.0;
  double c_mix = 4.0;
  double eps0 = 1e-9;
};

void validate(const DriverSpec& s);

class PathEnsemble {
 public:
  PathEnsemble() = default;
  PathEnsemble(std::size_t P, std::size_t len, double fill = 0.0) : P_(P), len_(len), v_(P * len, fill) {}

  std::size_t scenarios() const { return P_; }
  std::size_t length() const { return len_; }
  double operator()(std::size_t w, std::size_t l) const { return v_[w * len_ + l]; }
  double& at(std::size_t w, std::size_t l) { return v_[w * len_ + l]; }
  std::span<const double> row(std::size_t w) const { return std::span<const double>(v_).subspan(w * len_, len_); }
  std::span<double> row_mut(std::size_t w) { return std::span<double>(v_).subspan(w * len_, len_); }
  const std::vector<double>& data() const { return v_; }

 private:
  std::size_t P_ = 0, len_ = 0;
  std::vector<double> v_;
};

// H(w, k) in R^d is the value on (t_k, t_{k+1}], known at t_k; k = 0..N-1
class PredictablePath {
 public:
  PredictablePath() = default;
  PredictablePath(std::size_t P, std::size_t N, std::size_t d) : P_(P), N_(N), d_(d), v_(P * N * d, 0.0) {}

  std::size_t scenarios() const { return P_; }
  std::size_t steps() const { return N_; }
  std::size_t dim() const { return d_; }
  double operator()(std::size_t w, std::size_t k, std::size_t i = 0) const { return v_[(w * N_ + k) * d_ + i]; }
  double& at(std::size_t w, std::size_t k, std::size_t i = 0) { return v_[(w * N_ + k) * d_ + i]; }
  std::span<const double> slot(std::size_t w, std::size_t k) const {
    return std::span<const double>(v_).subspan((w * N_ + k) * d_, d_);
  }
  const std::vector<double>& data() const { return v_; }

 private:
  std::size_t P_ = 0, N_ = 0, d_ = 0;
  std::vector<double> v_;
};

inline constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

struct StoppingRule {
  std::vector<std::size_t> tau;  // grid index or kNever

  static StoppingRule never(std::size_t P) { return {std::vector<std::size_t>(P, kNever)}; }
  static StoppingRule constant(std::size_t P, std::size_t idx) { return {std::vector<std::size_t>(P, idx)}; }
  std::size_t operator[](std::size_t w) const { return tau[w]; }
  std::size_t size() const { return tau.size(); }
};

// slot k (increment t_k -> t_{k+1}) lies strictly before tau
inline bool before_tau(std::size_t k, std::size_t tau) { return tau == kNever || k + 2 <= tau; }

struct DriverPath {
  DriverSpec spec;
  TimeGrid grid;
  ScenarioSet scenarios;
  std::vector<double> S;   // (w, l, i), l = 0..N
  std::vector<double> dA;  // (w, k, i): finite-variation part of the increment (incl. compensator)
  std::vector<double> dJ;  // (w, k, i): raw jump sum over the step
  PathEnsemble V;

  std::size_t P() const { return scenarios.size(); }
  std::size_t N() const { return grid.N; }
  std::size_t d() const { return spec.dim; }
  double s(std::size_t w, std::size_t l, std::size_t i = 0) const { return S[(w * (N() + 1) + l) * d() + i]; }
  double ds(std::size_t w, std::size_t k, std::size_t i = 0) const { return s(w, k + 1, i) - s(w, k, i); }
  double da(std::size_t w, std::size_t k, std::size_t i = 0) const { return dA[(w * N() + k) * d() + i]; }
  double dj(std::size_t w, std::size_t k, std::size_t i = 0) const { return dJ[(w * N() + k) * d() + i]; }
  double dm(std::size_t w, std::size_t k, std::size_t i = 0) const { return ds(w, k, i) - da(w, k, i); }
};

// tree models: brownian b = 2^d sign patterns, compound Poisson
// b = 2 (no jump / jump of size jump_mean), mixture b = 4 (d = 1), fv drift b = 2
ScenarioSet tree_scenarios(const DriverSpec& spec, const TimeGrid& grid);

DriverPath simulate_driver(const DriverSpec& spec, const TimeGrid& grid, const ScenarioSet& sc);
PathEnsemble control_process(const DriverSpec& spec, const DriverPath& path);

// streaming variant for large Monte Carlo ensembles: one scenario at a time,
// same numbers as simulate_driver. Writes S as (l, i) into s_out.
void simulate_scenario(const DriverSpec& spec, const TimeGrid& grid, const ScenarioSet& sc, std::size_t w,
                       std::span<double> s_out);

// H.S, null at 0; with upto, only slots strictly before tau (stopped-before integral)
PathEnsemble ito_integral(const PredictablePath& H, const DriverPath& S, const StoppingRule* upto = nullptr);
PathEnsemble d_process(const PredictablePath& H, const PathEnsemble& A);

PathEnsemble fv_variation(const DriverPath& path);        // Var_t(A), Euclidean per step
PathEnsemble quadratic_variation(const DriverPath& path); // [M]_t on the grid

double v_tau_minus(const PathEnsemble& V, std::size_t w, std::size_t tau);

struct MuWeights {
  std::size_t P = 0, N = 0;
  std::vector<double> w;  // (scenario, slot)
  double operator()(std::size_t s, std::size_t k) const { return w[s * N + k]; }
  double total() const;
};

MuWeights mu_weights(const StoppingRule& tau, const PathEnsemble& V, const ScenarioSet& sc);
double l2_mu_sq(const PredictablePath& H, const MuWeights& mu);
double v_tau_l2(const PathEnsemble& V, const StoppingRule& tau, const ScenarioSet& sc);

// E[sup_l Z_l^2]^{1/2}
double r2_norm(const PathEnsemble& Z, const ScenarioSet& sc);

std::vector<StoppingRule> localizing_sequence(const PathEnsemble& V, const PathEnsemble* extra,
                                              const std::vector<double>& levels);

bool is_stopping_rule(const StoppingRule& tau, const ScenarioSet& sc);
bool is_adapted(const DriverPath& path);
bool is_predictable(const PredictablePath& H, const ScenarioSet& sc);

// nonrandom h_k on events {S^1_{t_k} >= threshold_k}; NaN threshold means all of Omega
struct VerySimple {
  std::size_t N = 0, d = 1;
  std::vector<double> h;
  std::vector<double> threshold;
};

VerySimple random_very_simple(std::size_t N, std::size_t d, std::mt19937_64& rng);
PredictablePath materialize(const VerySimple& H, const DriverPath& path);

struct ControlReport {
  double lhs = 0, rhs = 0, margin = 0, se = 0;
};

ControlReport control_inequality_check(const DriverPath& S, const PathEnsemble& V, const PredictablePath& H,
                                       const StoppingRule& tau);
std::vector<ControlReport> control_inequality_check(const DriverPath& S, const PathEnsemble& V,
                                                    const std::vector<PredictablePath>& family,
                                                    const StoppingRule& tau);

std::string to_csv(const DriverPath& path);

}  // namespace mvf
