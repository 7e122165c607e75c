#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mvf/drivers.hpp"
#include "mvf/grid_measure.hpp"

namespace mvf {

enum class Representation { elementary, kernel, volterra_induced, piecewise, derived };
std::string to_string(Representation r);

// Supplies the measure of slot k = (t_k, t_{k+1}] for scenario w as d*(J+1) weights.
class MeasureSource {
 public:
  virtual ~MeasureSource() = default;
  virtual void fill(std::size_t w, std::size_t k, std::span<double> out) const = 0;
  virtual bool deterministic() const { return false; }
  // time-continuous families also expose the measure at an instant r in (t_k, t_{k+1}]
  virtual bool has_instant() const { return false; }
  virtual void instant(std::size_t w, std::size_t k, double r, std::span<double> out) const;
};

struct ElementaryTerm {
  SignedMeasureVec m;
  std::size_t a = 0, b = 1;           // interval (t_a, t_b], i.e. slots a..b-1
  std::vector<std::uint8_t> member;   // indicator of A in F_{t_a}; empty means Omega
};

// psi is d*(J+1) (component-major), rho is J+1 and nonnegative
struct KernelFns {
  std::function<void(std::size_t w, std::size_t k, std::span<double> psi)> psi;
  std::function<void(std::size_t w, std::size_t k, std::span<double> rho)> rho;
  bool deterministic = false;
  std::function<void(std::size_t w, double r, std::span<double> out)> instant;  // optional
};

class MeasureProcess {
 public:
  MeasureProcess() = default;
  MeasureProcess(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d, Representation rep,
                 std::shared_ptr<const MeasureSource> src);

  const CompactGrid& grid() const { return grid_; }
  const TimeGrid& time_grid() const { return tg_; }
  const ScenarioSet& scenarios() const { return sc_; }
  std::size_t dim() const { return d_; }
  std::size_t P() const { return sc_.size(); }
  std::size_t N() const { return tg_.N; }
  std::size_t width() const { return d_ * grid_.atoms(); }
  Representation representation() const { return rep_; }
  bool deterministic() const { return src_->deterministic(); }
  bool has_instant() const { return src_->has_instant(); }

  void fill(std::size_t w, std::size_t k, std::span<double> out) const { src_->fill(w, k, out); }
  void instant(std::size_t w, std::size_t k, double r, std::span<double> out) const { src_->instant(w, k, r, out); }
  SignedMeasureVec at(std::size_t w, std::size_t k) const;

  const std::vector<ElementaryTerm>* elementary_terms() const;
  // psi/rho split, only for kernel representations
  const KernelFns* kernel() const;
  const std::shared_ptr<const MeasureSource>& source() const { return src_; }

 private:
  CompactGrid grid_;
  TimeGrid tg_;
  ScenarioSet sc_;
  std::size_t d_ = 1;
  Representation rep_ = Representation::derived;
  std::shared_ptr<const MeasureSource> src_;
};

MeasureProcess make_elementary(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d,
                               std::vector<ElementaryTerm> terms);
MeasureProcess make_kernel(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d,
                           KernelFns fns, Representation rep = Representation::kernel);
MeasureProcess zero_process(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d);
// sum_i c_i phi_i, all on the same grids
MeasureProcess linear_combination(const std::vector<double>& c, const std::vector<MeasureProcess>& phis);
inline MeasureProcess difference(const MeasureProcess& a, const MeasureProcess& b) {
  return linear_combination({1.0, -1.0}, {a, b});
}

// phi_r(dz) = alpha (z - r)^{alpha-1} 1{z > r} dz on K = [0, T_K]. Slot measures are the
// exact time averages over the slot; instants use the exact cell masses.
MeasureProcess power_kernel_phi(double alpha, const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc);
// the cell masses on their own: w_j = (z_j - r)_+^alpha - (z_{j-1} - r)_+^alpha
SignedMeasure power_instant_measure(double alpha, const CompactGrid& g, double r);

PredictablePath evaluate(const MeasureProcess& phi, std::span<const double> f);
std::vector<PredictablePath> evaluate_family(const MeasureProcess& phi, const TestFamily& fam);
PredictablePath variation_path(const MeasureProcess& phi);

// ||phi(u_k)||^2 in L^2(mu) for every family member
std::vector<double> family_l2_sq(const MeasureProcess& phi, const TestFamily& fam, const MuWeights& mu);
double q_seminorm(const MeasureProcess& phi, const TestFamily& fam, const StoppingRule& tau, const PathEnsemble& V);

struct PhiConstant {
  double lower = 0, upper = 0;
};
PhiConstant phi_constant(const MeasureProcess& phi, const TestFamily& fam, const StoppingRule& tau,
                         const PathEnsemble& V);

MeasureProcess truncate(const MeasureProcess& phi, double c);
double max_variation(const MeasureProcess& phi);

struct NetOptions {
  std::size_t d = 1;
  std::vector<std::size_t> atoms;  // coarse sub-grid; empty picks a default
};
// zero first, then quantized measures c*j/2^L on the sub-grid: level by level
// (L = 1, 2, ...), by support size, support sets lexicographic, digits in the order
// 1/2^L, -1/2^L, 2/2^L, ... ; renormalized into the ball and deduplicated
std::vector<SignedMeasureVec> weak_star_net(double c, std::size_t n, const CompactGrid& g, const NetOptions& opt = {});
double net_fineness(const std::vector<SignedMeasureVec>& net, const std::vector<SignedMeasureVec>& probes,
                    const TestFamily& fam);

struct Projection {
  MeasureProcess psi;                 // piecewise process taking net values
  std::vector<std::size_t> index;     // (w, k) -> net index
  std::vector<double> delta;          // (w, k) -> attained distance
  std::vector<SignedMeasureVec> net;
};
Projection project_to_net(const MeasureProcess& phi, const std::vector<SignedMeasureVec>& net, const TestFamily& fam);

MeasureProcess rectangle_refine(const Projection& proj);

struct ApproxSchedule {
  std::vector<std::size_t> net_sizes{4, 16, 64};
  double b = 0.0;  // truncation level b > 1, c = b - 1; 0 picks c = max variation
  double tolerance = 1e-6;
  NetOptions net;
};

struct ApproxReport {
  std::size_t n = 0;
  double q_error = 0;
  double uniform_constant = 0;
  double bound = 0;
  std::size_t net_size = 0;
  std::size_t rectangles = 0;
};

struct ApproxResult {
  std::vector<MeasureProcess> sequence;
  std::vector<ApproxReport> rows;
  bool reached = false;
  double b = 0;
  double c_phi = 0;
  double v_l2 = 0;
};

ApproxResult approximate_elementary(const MeasureProcess& phi, const StoppingRule& tau, const PathEnsemble& V,
                                    const TestFamily& fam, const ApproxSchedule& sched = {});

struct PhiCheck {
  bool member = true;
  PathEnsemble d_path;
  double sup = 0;
  std::size_t bad_scenario = kNever, bad_index = kNever;
};
// D(||phi||_var; V). Time-continuous families are integrated with Gauss-Legendre
// nodes inside each slot, V taken linear over the slot.
PhiCheck in_phi_check(const MeasureProcess& phi, const PathEnsemble& V);

std::string to_csv(const std::vector<ApproxReport>& rows);

}  // namespace mvf
