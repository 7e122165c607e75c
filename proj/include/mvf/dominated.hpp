#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvf/drivers.hpp"
#include "mvf/grid_measure.hpp"
#include "mvf/integrands.hpp"
#include "mvf/mvintegral.hpp"

namespace mvf {

// phi_t(dz) = psi_t(z) eta(dz) with a fixed nonnegative eta; real-valued S only
struct DominatedSpec {
  std::string label;
  CompactGrid grid;
  TimeGrid tg;
  ScenarioSet sc;
  std::vector<double> eta;  // J+1 cell masses
  // slot-k density on the atoms (J+1 values), known at t_k
  std::function<void(std::size_t w, std::size_t k, std::span<double> psi)> psi;
  bool deterministic = false;
  // > 0 marks the power model alpha (z - t)^{alpha-1} 1{z > t} on Lebesgue measure, which
  // also has exact square primitives and can be rebuilt at any J
  double alpha = 0.0;
};

DominatedSpec power_dominated_spec(double alpha, const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc);
DominatedSpec constant_dominated_spec(double c, std::vector<double> eta, const CompactGrid& g, const TimeGrid& tg,
                                      const ScenarioSet& sc);
// bounded random psi driven by S^1_{t_k}, random positive eta
DominatedSpec random_dominated_spec(const CompactGrid& g, const DriverPath& S, std::uint64_t seed);

MeasureProcess make_dominated(const DominatedSpec& spec);

// int_D (int_0^t psi_r(z) dS_r) eta(dz), atom by atom; reverse flips the atom order
PathEnsemble classic_fubini_rhs(const DominatedSpec& spec, const DriverPath& S, const CellSet& D, bool reverse = false);
FubiniReport compare_classic_vs_mv(const DominatedSpec& spec, const DriverPath& S, const std::vector<CellSet>& sets);

struct CondValue {
  bool finite = true;
  double sup = 0;
  double growth_ratio = NAN;  // only for probed conditions
  PathEnsemble path;
};

struct ConditionOptions {
  std::size_t probe_J0 = 512;
  std::size_t doublings = 3;
  double growth_factor = 1.5;
};

struct ConditionReport {
  CondValue c63, c64, c66, c67a, c67b, veraar_a, veraar_b;
  std::vector<std::pair<std::size_t, double>> probe;  // (J, refinement value at the horizon)
  bool probe_diverges = false;
  bool c64_implies_c63 = true;  // finiteness implication
  bool c63_le_c64 = true;       // pathwise Cauchy-Schwarz
  bool c66_implies_c64 = true;
};

ConditionReport condition_evaluator(const DominatedSpec& spec, const DriverPath& S, const PathEnsemble& V,
                                    const ConditionOptions& opt = {});
// square-integrability and variation paths for a general kernel integrand, any d
ConditionReport kernel_conditions(const MeasureProcess& phi, const PathEnsemble& V);

// refinement value sum_j w_j^2 / eta_j integrated in time, at grid resolution J
double refinement_value(const DominatedSpec& spec, const PathEnsemble& V, std::size_t J);

struct Certificate {
  bool hypotheses_met = false;
  bool dominated = false;
  bool product_measurable = true;
  bool c66_finite = false;
  bool probe_diverges = false;
  double growth_ratio = NAN;
  std::vector<std::pair<std::size_t, double>> probe;
  std::string detail;
};
Certificate measure_valuedness_certificate(const DominatedSpec& spec, const DriverPath& S, const PathEnsemble& V,
                                           const ConditionOptions& opt = {});

}  // namespace mvf
