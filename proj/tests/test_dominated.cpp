#include <gtest/gtest.h>

#include <cmath>

#include "mvf/dominated.hpp"
#include "mvf/drivers.hpp"
#include "mvf/integrands.hpp"
#include "mvf/mvintegral.hpp"

using namespace mvf;

namespace {

DriverSpec brownian() {
  DriverSpec s;
  s.kind = DriverKind::brownian;
  return s;
}

DriverSpec jumps() {
  DriverSpec s;
  s.kind = DriverKind::compound_poisson;
  s.vol = 0.0;
  s.jump_rate = 4.0;
  s.jump_mean = 0.1;
  s.jump_sd = 0.5;
  return s;
}

struct Run {
  CompactGrid g;
  TimeGrid tg;
  DriverPath S;
  PathEnsemble V;
};

Run make_run(std::size_t J, std::size_t N, std::size_t P, DriverSpec sp = brownian(), std::uint64_t seed = 3) {
  Run r{CompactGrid(1.0, J), TimeGrid(1.0, N), {}, {}};
  r.S = simulate_driver(sp, r.tg, ScenarioSet::monte_carlo(P, seed));
  r.V = control_process(sp, r.S);
  return r;
}

double pospow(double x, double a) { return x > 0 ? std::pow(x, a) : 0.0; }

}  // namespace

TEST(MakeDominated, UnitDensityZeroEtaAndPower) {
  auto r = make_run(8, 6, 4);
  std::vector<double> eta{0.0, 0.1, 0.2, 0.3, 0.1, 0.0, 0.5, 0.2, 0.1};
  auto phi = make_dominated(constant_dominated_spec(1.0, eta, r.g, r.tg, r.S.scenarios));
  for (std::size_t w = 0; w < 4; ++w)
    for (std::size_t k = 0; k < 6; ++k) {
      auto m = phi.at(w, k);
      for (std::size_t j = 0; j < 9; ++j) EXPECT_DOUBLE_EQ(m.component(0)[j], eta[j]);
    }
  auto z = make_dominated(constant_dominated_spec(3.0, std::vector<double>(9, 0.0), r.g, r.tg, r.S.scenarios));
  EXPECT_EQ(max_variation(z), 0.0);

  auto bad = eta;
  bad[2] = -0.1;
  EXPECT_THROW(make_dominated(constant_dominated_spec(1.0, bad, r.g, r.tg, r.S.scenarios)), std::invalid_argument);

  auto p = make_dominated(power_dominated_spec(1.0, CompactGrid(1.0, 64), r.tg, r.S.scenarios));
  auto var = variation_path(p);
  for (std::size_t k = 0; k < 6; ++k) {
    double a = r.tg.t(k), b = r.tg.t(k + 1);
    EXPECT_NEAR(var(0, k), ((1 - a) * (1 - a) - (1 - b) * (1 - b)) / (2 * (b - a)), 1e-13);
  }
}

TEST(ClassicFubini, UnitDensityEmptyAndPower) {
  auto r = make_run(8, 10, 20);
  std::vector<double> eta(9, 0.125);
  eta[0] = 0.0;
  auto spec = constant_dominated_spec(1.0, eta, r.g, r.tg, r.S.scenarios);
  auto full = classic_fubini_rhs(spec, r.S, full_set(r.g));
  auto empty = classic_fubini_rhs(spec, r.S, empty_set(r.g));
  for (std::size_t w = 0; w < 20; ++w)
    for (std::size_t l = 0; l <= 10; ++l) {
      EXPECT_NEAR(full(w, l), 1.0 * (r.S.s(w, l) - r.S.s(w, 0)), 1e-14);
      EXPECT_EQ(empty(w, l), 0.0);
    }
  CellSet half{"half", GridFunction(9, 0.5)};
  EXPECT_THROW(classic_fubini_rhs(spec, r.S, half), std::invalid_argument);

  const double alpha = 0.75;
  CompactGrid g(1.0, 128);
  auto ps = power_dominated_spec(alpha, g, r.tg, r.S.scenarios);
  for (double u : {0.25, 0.5, 1.0}) {
    auto rhs = classic_fubini_rhs(ps, r.S, closed_interval_set(g, 0.0, u));
    PredictablePath H(20, 10, 1);
    for (std::size_t k = 0; k < 10; ++k) {
      double a = r.tg.t(k), b = r.tg.t(k + 1);
      double v = (pospow(u - a, alpha + 1) - pospow(u - b, alpha + 1)) / ((alpha + 1) * (b - a));
      for (std::size_t w = 0; w < 20; ++w) H.at(w, k) = v;
    }
    auto ito = ito_integral(H, r.S);
    for (std::size_t w = 0; w < 20; ++w)
      for (std::size_t l = 0; l <= 10; ++l) EXPECT_NEAR(rhs(w, l), ito(w, l), 1e-10);
  }
}

TEST(ClassicFubini, AtomOrderIndependence) {
  auto r = make_run(32, 16, 30, jumps());
  auto spec = random_dominated_spec(r.g, r.S, 5);
  for (const auto& D : {full_set(r.g), closed_interval_set(r.g, 0.25, 0.75)}) {
    auto fwd = classic_fubini_rhs(spec, r.S, D), rev = classic_fubini_rhs(spec, r.S, D, true);
    for (std::size_t i = 0; i < fwd.data().size(); ++i) EXPECT_NEAR(fwd.data()[i], rev.data()[i], 1e-12);
  }
}

TEST(CompareClassicVsMv, ConstantPowerAndRandom) {
  auto r = make_run(16, 12, 25);
  std::vector<double> eta(17, 1.0 / 16);
  auto sets = std::vector<CellSet>{full_set(r.g), empty_set(r.g), closed_interval_set(r.g, 0.0, 0.5), singleton_set(r.g, 3)};
  EXPECT_LE(compare_classic_vs_mv(constant_dominated_spec(2.0, eta, r.g, r.tg, r.S.scenarios), r.S, sets).max_abs,
            1e-14);

  CompactGrid g(1.0, 128);
  auto ps = power_dominated_spec(0.75, g, r.tg, r.S.scenarios);
  std::vector<CellSet> us{closed_interval_set(g, 0.0, 0.25), closed_interval_set(g, 0.0, 0.5), full_set(g)};
  EXPECT_LE(compare_classic_vs_mv(ps, r.S, us).max_abs, 1e-10);

  auto j = make_run(16, 20, 40, jumps(), 8);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rep = compare_classic_vs_mv(random_dominated_spec(j.g, j.S, seed), j.S, sets);
    EXPECT_LE(rep.max_abs, 1e-10);
    EXPECT_EQ(rep.rows.size(), sets.size());
  }
}

TEST(Conditions, BoundedAllFinite) {
  auto r = make_run(16, 16, 20, jumps());
  auto rep = condition_evaluator(random_dominated_spec(r.g, r.S, 2), r.S, r.V);
  for (const CondValue* c : {&rep.c63, &rep.c64, &rep.c66, &rep.c67a, &rep.c67b, &rep.veraar_a, &rep.veraar_b}) {
    EXPECT_TRUE(c->finite);
    EXPECT_TRUE(std::isfinite(c->sup));
  }
  EXPECT_GT(rep.c67b.sup, 0.0);
  EXPECT_TRUE(rep.c63_le_c64);
}

TEST(Conditions, PowerSquareIntegrability) {
  auto r = make_run(8, 16, 2);
  for (auto [alpha, tol] : {std::pair{1.0, 1e-12}, std::pair{2.0, 1e-12}, std::pair{0.75, 1e-3}}) {
    auto rep = condition_evaluator(power_dominated_spec(alpha, CompactGrid(1.0, 64), r.tg, r.S.scenarios), r.S, r.V);
    EXPECT_TRUE(rep.c66.finite);
    EXPECT_FALSE(rep.probe_diverges);
    for (std::size_t l = 0; l <= 16; ++l) {
      double t = r.tg.t(l);
      double want = alpha * alpha / (2 * alpha * (2 * alpha - 1)) * (1.0 - std::pow(1.0 - t, 2 * alpha));
      EXPECT_NEAR(rep.c66.path(0, l), want, tol) << alpha << " t=" << t;
    }
  }
  auto one = condition_evaluator(power_dominated_spec(1.0, CompactGrid(1.0, 64), r.tg, r.S.scenarios), r.S, r.V);
  EXPECT_NEAR(one.c66.path(1, 16), 0.5, 1e-12);

  for (double alpha : {0.25, 0.4, 0.5}) {
    auto rep = condition_evaluator(power_dominated_spec(alpha, CompactGrid(1.0, 64), r.tg, r.S.scenarios), r.S, r.V);
    EXPECT_FALSE(rep.c66.finite) << alpha;
  }
}

TEST(Conditions, ProbeMonotoneInJ) {
  auto r = make_run(8, 8, 2);
  for (double alpha : {0.25, 0.5, 0.75, 1.5}) {
    auto spec = power_dominated_spec(alpha, CompactGrid(1.0, 64), r.tg, r.S.scenarios);
    double prev = 0.0;
    for (std::size_t J : {64, 128, 256, 512, 1024, 2048}) {
      double v = refinement_value(spec, r.V, J);
      EXPECT_GE(v, prev * (1 - 1e-12)) << alpha << " J=" << J;
      prev = v;
    }
  }
  auto rep = condition_evaluator(power_dominated_spec(0.25, CompactGrid(1.0, 64), r.tg, r.S.scenarios), r.S, r.V);
  ASSERT_EQ(rep.probe.size(), 4u);
  EXPECT_TRUE(rep.probe_diverges);
  EXPECT_GT(rep.c66.growth_ratio, 1.5);
}

TEST(Conditions, HierarchyOnRandomSpecs) {
  auto r = make_run(16, 12, 15, jumps(), 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rep = condition_evaluator(random_dominated_spec(r.g, r.S, seed), r.S, r.V);
    EXPECT_TRUE(rep.c64_implies_c63);
    EXPECT_TRUE(rep.c63_le_c64);
    EXPECT_TRUE(rep.c66_implies_c64);
  }
}

TEST(Conditions, GeneralKernelAnyDimension) {
  CompactGrid g(1.0, 8);
  TimeGrid tg(1.0, 6);
  auto sc = ScenarioSet::monte_carlo(5, 1);
  PathEnsemble V(5, 7);
  for (std::size_t w = 0; w < 5; ++w)
    for (std::size_t l = 0; l <= 6; ++l) V.at(w, l) = tg.t(l) * (1 + w);
  KernelFns f;
  f.rho = [](std::size_t, std::size_t k, std::span<double> rho) {
    for (std::size_t j = 0; j < rho.size(); ++j) rho[j] = 0.1 * (j + k + 1);
  };
  f.psi = [](std::size_t w, std::size_t k, std::span<double> psi) {
    for (std::size_t j = 0; j < psi.size(); ++j) psi[j] = std::sin(1.0 + j * 0.7 + k + w);
  };
  auto phi = make_kernel(g, tg, sc, 2, f);
  auto rep = kernel_conditions(phi, V);
  EXPECT_TRUE(rep.c63.finite);
  EXPECT_TRUE(rep.c64.finite);
  EXPECT_TRUE(rep.c63_le_c64);
  EXPECT_THROW(kernel_conditions(zero_process(g, tg, sc, 1), V), std::invalid_argument);
}

TEST(Certificate, BoundedAndPowerKernels) {
  auto r = make_run(16, 16, 4);
  std::vector<double> eta(17, 1.0 / 16);
  auto bounded = measure_valuedness_certificate(constant_dominated_spec(1.0, eta, r.g, r.tg, r.S.scenarios), r.S, r.V);
  EXPECT_TRUE(bounded.hypotheses_met) << bounded.detail;

  CompactGrid g(1.0, 64);
  auto good = measure_valuedness_certificate(power_dominated_spec(0.75, g, r.tg, r.S.scenarios), r.S, r.V);
  EXPECT_TRUE(good.hypotheses_met) << good.detail;
  EXPECT_EQ(good.probe.size(), 4u);
  auto bad = measure_valuedness_certificate(power_dominated_spec(0.25, g, r.tg, r.S.scenarios), r.S, r.V);
  EXPECT_FALSE(bad.hypotheses_met) << bad.detail;
  EXPECT_TRUE(bad.probe_diverges);
  EXPECT_TRUE(bad.dominated);

  auto neg = constant_dominated_spec(1.0, eta, r.g, r.tg, r.S.scenarios);
  neg.eta[1] = -1.0;
  auto nc = measure_valuedness_certificate(neg, r.S, r.V);
  EXPECT_FALSE(nc.dominated);
  EXPECT_FALSE(nc.hypotheses_met);
}
