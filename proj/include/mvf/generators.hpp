#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "mvf/drivers.hpp"
#include "mvf/integrands.hpp"

namespace mvf {

// n_terms constant measures on predictable rectangles (t_a, t_b] x A with
// A = {S^1_{t_a} >= thr} or Omega; measures use up to 5 random atoms
MeasureProcess random_elementary(const CompactGrid& g, const DriverPath& S, std::size_t n_terms, std::mt19937_64& rng);

// rho = delta at an atom, psi = amplitude in c*{+-1/2, +-1}; both chosen per (slot, F_{t_k} atom)
// from the seed, so the process is predictable in tree mode. Monte Carlo mode draws per scenario.
MeasureProcess random_dirac_kernel(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, double c,
                                   std::uint64_t seed);

}  // namespace mvf
