#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvf/drivers.hpp"
#include "mvf/integrands.hpp"

namespace mvf {

// Discretised two-parameter kernel. The grid value Psi(l, k) is the average of
// Psi(t_l, s) over s in slot k, zero for l <= k; diag(k) = Psi(t_k, t_k) is read at
// the slot's left end. Each component of S gets the same scalar kernel.
// Adapted kernels carry a (scenario, slot) multiplier known at t_k.
struct VolterraKernel {
  std::string name;
  TimeGrid tg;
  bool toeplitz = false;
  std::vector<double> conv;   // toeplitz: Psi(l, k) = conv[l - k - 1]
  std::vector<double> table;  // otherwise (N+1) x N, row l
  std::vector<double> diag;   // N
  std::size_t scale_P = 0;
  std::vector<double> scale;  // scale_P x N, empty for deterministic kernels
  std::function<double(double t, double s)> value;    // optional Psi(t, s) for s <= t
  std::function<double(double r, double s)> density;  // optional d/dt Psi(r, s)

  std::size_t N() const { return tg.N; }
  bool adapted() const { return !scale.empty(); }
  double psi(std::size_t l, std::size_t k) const {
    if (l <= k) return 0.0;
    return toeplitz ? conv[l - k - 1] : table[l * tg.N + k];
  }
  double mult(std::size_t w, std::size_t k) const { return scale.empty() ? 1.0 : scale[w * tg.N + k]; }
};

struct UnknownKernel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// power_alpha {alpha}, affine {a, b}, quadratic {}, exp_decay {lambda}, constant {c},
// random_fv {seed}, tabulated {path}. Unknown names throw UnknownKernel.
VolterraKernel make_volterra_kernel(const std::string& name, const std::map<std::string, double>& params,
                                    const TimeGrid& tg, const std::string& path = "");
VolterraKernel power_alpha_kernel(double alpha, const TimeGrid& tg);
VolterraKernel affine_kernel(double a, double b, const TimeGrid& tg);
VolterraKernel quadratic_kernel(const TimeGrid& tg);
VolterraKernel exp_decay_kernel(double lambda, const TimeGrid& tg);
VolterraKernel constant_kernel(double c, const TimeGrid& tg);
VolterraKernel random_fv_kernel(const TimeGrid& tg, std::uint64_t seed);
// table rows l = 0..N with N values each, then a row "diag,..." with N values
VolterraKernel tabulated_kernel(const TimeGrid& tg, std::vector<double> table, std::vector<double> diag);
VolterraKernel load_tabulated_kernel(const TimeGrid& tg, const std::string& csv_path);
std::string kernel_to_csv(const VolterraKernel& K);
// multiplier 1 + tanh(S^1_{t_k} - s0)/2, predictable by construction
VolterraKernel adapt_kernel(const VolterraKernel& K, const DriverPath& S);

// X_l = sum_{k < l} Psi(l, k) . dS_k; toeplitz kernels go through FFT convolution above 64 steps
PathEnsemble volterra_direct(const VolterraKernel& K, const DriverPath& S);
// direct O(N^2) sum, kept for cross-checks
PathEnsemble volterra_direct_naive(const VolterraKernel& K, const DriverPath& S);
// full linear convolution out[l] = sum_{k<l} c[l-k-1] x[k], l = 0..n
void toeplitz_apply(const std::vector<double>& c, const std::vector<double>& x, std::vector<double>& out);

// phi^(T) on the compact grid K = [0, T] with J = N: the slot-k measure has cumulative
// mass Psi(l, k) - diag(k) on [0, t_l] for l > k and nothing at or below t_k
MeasureProcess induced_phi(const VolterraKernel& K, std::size_t d, const ScenarioSet& sc);
CompactGrid induced_grid(const VolterraKernel& K);

struct Decomposition {
  PathEnsemble diag, Y, Y_left, X_direct, X_reconstructed;
  double max_diff = 0;
  bool integrable = true;
};
// Y through the terminal charge of phi^(T).S paired with I_[0,t]; Y_left from the charge at l-1
Decomposition decomposition(const VolterraKernel& K, const DriverPath& S, const PathEnsemble& V);
// Y_left(l) agrees across every scenario in each F_{t_{l-1}} atom
bool y_left_predictable(const Decomposition& dec, const ScenarioSet& sc);

struct VariationCheck {
  bool integrable = true;
  PathEnsemble d_path;
  double sup = 0;
  std::size_t bad_scenario = kNever, bad_index = kNever;
};
VariationCheck variation_condition_check(const VolterraKernel& K, const DriverPath& S, const PathEnsemble& V);

// diag + int_0^t (int_0^r psi(r, s) dS_s) dr: midpoint rule off the diagonal,
// triangle centroid on it
PathEnsemble protter_dominated(const VolterraKernel& K, const DriverPath& S);

// Volterra paths for a Monte Carlo driver, one scenario at a time (toeplitz kernels only)
PathEnsemble simulate_volterra(const VolterraKernel& K, const DriverSpec& spec, const ScenarioSet& sc);

struct DiagnosticLevel {
  std::size_t n = 0;
  double h = 0, tv = 0;
};
struct Diagnostic {
  double slope = 0;
  std::vector<DiagnosticLevel> levels;
};
// Y on the finest grid, coarser levels by subsampling to n steps
Diagnostic semimartingale_diagnostic(const PathEnsemble& Y, double T, const std::vector<std::size_t>& levels);

struct DiagonalCheck {
  PathEnsemble stat;
  double mean = 0;
  bool locally_integrable = true;
};
// running (sum (diag * jump)^2)^{1/2} over the jump part of S
DiagonalCheck diagonal_martingale_check(const VolterraKernel& K, const DriverPath& S);

std::string to_csv(const Diagnostic& d);

}  // namespace mvf
