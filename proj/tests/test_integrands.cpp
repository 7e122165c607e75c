#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mvf/drivers.hpp"
#include "mvf/generators.hpp"
#include "mvf/integrands.hpp"
#include "mvf/util.hpp"

using namespace mvf;

namespace {

DriverSpec brownian() {
  DriverSpec s;
  s.kind = DriverKind::brownian;
  return s;
}

struct Setup {
  CompactGrid g;
  TimeGrid tg;
  ScenarioSet sc;
  DriverPath S;
  PathEnsemble V;
  TestFamily fam;
};

Setup mc_setup(std::size_t P = 200, std::size_t N = 8, std::size_t J = 8) {
  Setup s{CompactGrid(1.0, J), TimeGrid(1.0, N), ScenarioSet::monte_carlo(P, 21), {}, {}, {}};
  s.S = simulate_driver(brownian(), s.tg, s.sc);
  s.V = control_process(brownian(), s.S);
  s.fam = build_test_family(s.g, 40);
  return s;
}

Setup tree_setup(double T = 4.0, std::size_t N = 3, std::size_t J = 8) {
  Setup s{CompactGrid(1.0, J), TimeGrid(T, N), ScenarioSet::tree(2, N), {}, {}, {}};
  s.S = simulate_driver(brownian(), s.tg, s.sc);
  s.V = control_process(brownian(), s.S);
  s.fam = build_test_family(s.g, 64);
  return s;
}

// bounded scenario-dependent kernel with variations spread over (0, 4)
MeasureProcess spread_kernel(const Setup& s) {
  KernelFns f;
  const std::size_t A = s.g.atoms();
  f.rho = [A](std::size_t, std::size_t, std::span<double> rho) {
    for (std::size_t j = 0; j < A; ++j) rho[j] = 1.0 / static_cast<double>(A);
  };
  f.psi = [A](std::size_t w, std::size_t k, std::span<double> psi) {
    std::uint64_t h = mix64(w * 1315423911ULL + k);
    double scale = 4.0 * static_cast<double>(h % 1000) / 1000.0;
    for (std::size_t j = 0; j < A; ++j) psi[j] = scale * std::sin(static_cast<double>(j + k) + 0.3 * w);
  };
  return make_kernel(s.g, s.tg, s.sc, 1, std::move(f));
}

SignedMeasureVec point_mass(const CompactGrid& g, std::size_t j, double x) {
  SignedMeasureVec m(g, 1);
  m.component_mut(0)[j] = x;
  return m;
}

double max_abs_diff(const PredictablePath& a, const PredictablePath& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST(Evaluate, ElementaryConstantAndZero) {
  auto s = mc_setup(10);
  SignedMeasureVec m(s.g, 1);
  for (std::size_t j = 0; j < s.g.atoms(); ++j) m.component_mut(0)[j] = 0.1 * j - 0.3;
  double mass = 0.0;
  for (double x : m.component(0)) mass += x;
  auto phi = make_elementary(s.g, s.tg, s.sc, 1, {ElementaryTerm{m, 0, s.tg.N, {}}});
  auto one = evaluate(phi, GridFunction(s.g.atoms(), 1.0));
  auto zero = evaluate(phi, GridFunction(s.g.atoms(), 0.0));
  for (std::size_t w = 0; w < 10; ++w)
    for (std::size_t k = 0; k < s.tg.N; ++k) {
      EXPECT_NEAR(one(w, k), mass, 1e-15);
      EXPECT_EQ(zero(w, k), 0.0);
    }
  EXPECT_THROW(evaluate(phi, GridFunction(3, 1.0)), std::invalid_argument);
}

TEST(Evaluate, PowerKernelNetMass) {
  // slot k carries the time average of (T - r)^alpha when T_K = T
  for (double alpha : {0.5, 1.0, 2.0}) {
    CompactGrid g(1.0, 64);
    TimeGrid tg(1.0, 16);
    auto sc = ScenarioSet::monte_carlo(2, 1);
    auto phi = power_kernel_phi(alpha, g, tg, sc);
    auto e = evaluate(phi, GridFunction(g.atoms(), 1.0));
    auto var = variation_path(phi);
    for (std::size_t k = 0; k < tg.N; ++k) {
      double a = tg.t(k), b = tg.t(k + 1);
      double want = (std::pow(1 - a, alpha + 1) - std::pow(1 - b, alpha + 1)) / ((alpha + 1) * (b - a));
      EXPECT_NEAR(e(1, k), want, 1e-13);
      EXPECT_NEAR(var(1, k), want, 1e-13);
    }
    // instants are exact: unit-mass check at r = 0.5 for alpha = 1
    std::vector<double> buf(g.atoms());
    phi.instant(0, 8, 0.5, buf);
    double tv = 0.0;
    for (double x : buf) tv += std::abs(x);
    EXPECT_NEAR(tv, std::pow(0.5, alpha), 1e-14);
  }
}

TEST(VariationPath, ZeroProcess) {
  auto s = mc_setup(5);
  auto v = variation_path(zero_process(s.g, s.tg, s.sc, 2));
  for (double x : v.data()) EXPECT_EQ(x, 0.0);
}

TEST(VariationPath, MatchesHatSupremum) {
  auto s = mc_setup(20);
  auto phi = spread_kernel(s);
  // hats plus all sign vectors of a 9-atom grid would be 521 functions; use the hats directly
  auto var = variation_path(phi);
  auto fam = build_test_family(s.g, s.g.atoms());
  auto ev = evaluate_family(phi, fam);
  for (std::size_t w = 0; w < 20; ++w)
    for (std::size_t k = 0; k < s.tg.N; ++k) {
      double sum = 0.0;
      for (std::size_t q = 0; q < fam.size(); ++q) sum += std::abs(ev[q](w, k));
      EXPECT_NEAR(var(w, k), sum, 1e-13);
    }
}

TEST(QSeminorm, ZeroAndAxioms) {
  auto s = mc_setup();
  auto tau = StoppingRule::never(s.sc.size());
  EXPECT_EQ(q_seminorm(zero_process(s.g, s.tg, s.sc, 1), s.fam, tau, s.V), 0.0);
  std::mt19937_64 rng(5);
  for (int it = 0; it < 10; ++it) {
    auto a = random_elementary(s.g, s.S, 4, rng), b = random_elementary(s.g, s.S, 3, rng);
    double qa = q_seminorm(a, s.fam, tau, s.V), qb = q_seminorm(b, s.fam, tau, s.V);
    double qs = q_seminorm(linear_combination({1.0, 1.0}, {a, b}), s.fam, tau, s.V);
    EXPECT_LE(qs, (qa + qb) * (1 + 1e-12));
    double qh = q_seminorm(linear_combination({-2.5}, {a}), s.fam, tau, s.V);
    EXPECT_NEAR(qh, 2.5 * qa, 1e-12 * qh);
  }
}

TEST(QSeminorm, TreeHandEnumeration) {
  CompactGrid g(1.0, 2);
  TimeGrid tg(1.0, 1);
  auto sc = ScenarioSet::tree(2, 1, {0.25, 0.75});
  PathEnsemble V(2, 2);
  V.at(0, 1) = 1.0;
  V.at(1, 1) = 3.0;
  SignedMeasureVec m(g, 1, {0.5, -2.0, 1.0});
  auto phi = make_elementary(g, tg, sc, 1, {ElementaryTerm{m, 0, 1, {}}});
  TestFamily fam(g, {GridFunction{0, 1, 0}}, {1.0});
  double q = q_seminorm(phi, fam, StoppingRule::never(2), V);
  // phi(u_1) = -2 everywhere; mu = p * V_T * dV
  EXPECT_DOUBLE_EQ(q * q, 4.0 * (0.25 * 1.0 * 1.0 + 0.75 * 3.0 * 3.0));
}

TEST(PhiConstant, BoundsAndZero) {
  auto s = mc_setup();
  auto tau = StoppingRule::never(s.sc.size());
  auto z = phi_constant(zero_process(s.g, s.tg, s.sc, 1), s.fam, tau, s.V);
  EXPECT_EQ(z.lower, 0.0);
  EXPECT_EQ(z.upper, 0.0);

  // values in U_c: upper <= c sqrt(d) ||V_tau-||
  const double c = 1.5;
  auto phi = random_dirac_kernel(s.g, s.tg, s.sc, c, 4);
  EXPECT_LE(max_variation(phi), c);
  auto pc = phi_constant(phi, s.fam, tau, s.V);
  EXPECT_LE(pc.lower, pc.upper + 1e-12);
  EXPECT_LE(pc.upper, c * v_tau_l2(s.V, tau, s.sc) + 1e-12);

  std::mt19937_64 rng(9);
  for (int it = 0; it < 10; ++it) {
    auto e = random_elementary(s.g, s.S, 3, rng);
    auto p = phi_constant(e, s.fam, tau, s.V);
    EXPECT_LE(p.lower, p.upper + 1e-12);
    EXPECT_TRUE(std::isfinite(p.upper));
    EXPECT_TRUE(in_phi_check(e, s.V).member);
  }
}

TEST(PhiConstant, PowerKernelClosedForm) {
  // upper^2 = E[V_T D_T(|phi|_var; V)], V = t, slot-averaged variations
  const double alpha = 1.0, T = 1.0;
  CompactGrid g(T, 64);
  TimeGrid tg(T, 32);
  auto sc = ScenarioSet::monte_carlo(3, 1);
  auto S = simulate_driver(brownian(), tg, sc);
  auto V = control_process(brownian(), S);
  auto phi = power_kernel_phi(alpha, g, tg, sc);
  auto pc = phi_constant(phi, build_test_family(g, 65), StoppingRule::never(3), V);
  double want = 0.0;
  for (std::size_t k = 0; k < tg.N; ++k) {
    double a = tg.t(k), b = tg.t(k + 1);
    double avg = (std::pow(T - a, alpha + 1) - std::pow(T - b, alpha + 1)) / ((alpha + 1) * (b - a));
    want += avg * avg * (b - a);
  }
  want *= T;
  EXPECT_NEAR(pc.upper * pc.upper, want, 1e-12);
  // continuum value T * T^{2a+1}/(2a+1), off by the slot averaging only
  EXPECT_NEAR(want, 1.0 / 3.0, 1e-3);
}

TEST(Truncate, LimitsAndConvergence) {
  auto s = mc_setup(100);
  auto tau = StoppingRule::never(s.sc.size());
  auto phi = spread_kernel(s);
  const double vmax = max_variation(phi);
  auto same = truncate(phi, vmax);
  EXPECT_EQ(max_abs_diff(variation_path(same), variation_path(phi)), 0.0);
  EXPECT_EQ(max_variation(truncate(phi, 1e-300)), 0.0);
  double prev = INFINITY;
  for (double c : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    auto t = truncate(phi, c);
    EXPECT_LE(max_variation(t), c);
    double q = q_seminorm(difference(phi, t), s.fam, tau, s.V);
    EXPECT_LE(q, prev);
    prev = q;
  }
  EXPECT_EQ(prev, 0.0);
}

TEST(Net, ConventionsAndFineness) {
  CompactGrid g(1.0, 8);
  auto one = weak_star_net(2.0, 1, g);
  ASSERT_EQ(one.size(), 1u);
  for (double x : one[0].flat()) EXPECT_EQ(x, 0.0);
  auto fam = build_test_family(g, 64);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  std::vector<SignedMeasureVec> probes;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> w(g.atoms());
    double tv = 0.0;
    for (auto& x : w) tv += std::abs(x = n01(rng));
    for (auto& x : w) x *= 2.0 / tv * 0.9;
    probes.emplace_back(g, 1, w);
  }
  double prev = INFINITY;
  for (std::size_t n : {1, 4, 16, 64, 256}) {
    auto net = weak_star_net(2.0, n, g);
    EXPECT_EQ(net.size(), n);
    for (const auto& m : net) EXPECT_LE(total_variation(m)[0], 2.0 * (1 + 1e-15));
    double f = net_fineness(net, probes, fam);
    EXPECT_LE(f, prev);
    prev = f;
  }
  auto net2 = weak_star_net(1.0, 30, g, NetOptions{2, {}});
  for (const auto& m : net2)
    for (double v : total_variation(m)) EXPECT_LE(v, 1.0 + 1e-15);
}

TEST(Project, ExactHitTieBreakAndMonotone) {
  auto s = tree_setup();
  auto net = weak_star_net(1.0, 16, s.g);
  // constant phi equal to net element 5
  auto phi = make_elementary(s.g, s.tg, s.sc, 1, {ElementaryTerm{net[5], 0, s.tg.N, {}}});
  auto pr = project_to_net(phi, net, s.fam);
  for (auto j : pr.index) EXPECT_EQ(j, 5u);
  for (double d : pr.delta) EXPECT_EQ(d, 0.0);

  // phi = 0 is equidistant from +m and -m: lower index wins
  std::vector<SignedMeasureVec> pm{point_mass(s.g, 3, 0.5), point_mass(s.g, 3, -0.5)};
  auto zp = project_to_net(zero_process(s.g, s.tg, s.sc, 1), pm, s.fam);
  for (auto j : zp.index) EXPECT_EQ(j, 0u);
  EXPECT_THROW(project_to_net(phi, {}, s.fam), std::invalid_argument);

  auto rk = random_dirac_kernel(s.g, s.tg, s.sc, 1.0, 99);
  std::vector<double> prev;
  for (std::size_t n : {4, 16, 64}) {
    auto p = project_to_net(rk, weak_star_net(1.0, n, s.g), s.fam);
    if (!prev.empty())
      for (std::size_t i = 0; i < prev.size(); ++i) EXPECT_LE(p.delta[i], prev[i]);
    prev = p.delta;
  }
}

TEST(RectangleRefine, ExactOnFamily) {
  auto s = tree_setup();
  auto rk = random_dirac_kernel(s.g, s.tg, s.sc, 1.0, 5);
  auto pr = project_to_net(rk, weak_star_net(1.0, 64, s.g), s.fam);
  auto e = rectangle_refine(pr);
  EXPECT_EQ(e.representation(), Representation::elementary);
  auto a = evaluate_family(e, s.fam), b = evaluate_family(pr.psi, s.fam);
  for (std::size_t q = 0; q < s.fam.size(); ++q) EXPECT_EQ(max_abs_diff(a[q], b[q]), 0.0);

  // Omega x (0, T] with one net value stays a single rectangle
  auto net = weak_star_net(1.0, 8, s.g);
  auto whole = make_elementary(s.g, s.tg, s.sc, 1, {ElementaryTerm{net[3], 0, s.tg.N, {}}});
  auto ref = rectangle_refine(project_to_net(whole, net, s.fam));
  ASSERT_EQ(ref.elementary_terms()->size(), 1u);
  EXPECT_TRUE(ref.elementary_terms()->front().member.empty());

  // one atom at one interval: one rectangle
  std::vector<std::uint8_t> mem(s.sc.size(), 0);
  for (std::size_t w = 0; w < s.sc.size(); ++w) mem[w] = s.sc.atom(w, 1) == 1;
  auto one = make_elementary(s.g, s.tg, s.sc, 1, {ElementaryTerm{net[2], 1, 2, mem}});
  auto r1 = rectangle_refine(project_to_net(one, net, s.fam));
  ASSERT_EQ(r1.elementary_terms()->size(), 1u);
  EXPECT_EQ(r1.elementary_terms()->front().member, mem);

  auto m = mc_setup(10);
  auto pm = project_to_net(zero_process(m.g, m.tg, m.sc, 1), net, m.fam);
  EXPECT_THROW(rectangle_refine(pm), std::logic_error);
}

TEST(Approximate, TrivialCases) {
  auto s = tree_setup();
  auto tau = StoppingRule::never(s.sc.size());
  auto net = weak_star_net(1.0, 8, s.g);
  auto el = make_elementary(s.g, s.tg, s.sc, 1, {ElementaryTerm{net[4], 0, 2, {}}});
  auto r = approximate_elementary(el, tau, s.V, s.fam);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].q_error, 0.0);
  auto z = approximate_elementary(zero_process(s.g, s.tg, s.sc, 1), tau, s.V, s.fam);
  EXPECT_EQ(z.rows[0].q_error, 0.0);
  EXPECT_TRUE(z.reached);

  auto m = mc_setup(10);
  EXPECT_THROW(approximate_elementary(zero_process(m.g, m.tg, m.sc, 1), StoppingRule::never(10), m.V, m.fam),
               std::logic_error);
}

TEST(Approximate, RandomKernelOnBinaryTree) {
  auto s = tree_setup();
  auto tau = StoppingRule::never(s.sc.size());
  for (std::uint64_t seed : {1, 2, 3}) {
    auto phi = random_dirac_kernel(s.g, s.tg, s.sc, 1.0, seed);
    auto r = approximate_elementary(phi, tau, s.V, s.fam);
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_GT(r.rows[0].q_error, r.rows[1].q_error);
    EXPECT_TRUE(r.rows[1].q_error > r.rows[2].q_error || r.rows[1].q_error == 0.0);
    EXPECT_TRUE(r.reached);
    for (const auto& row : r.rows) {
      EXPECT_LE(row.uniform_constant, row.bound);
      EXPECT_EQ(row.net_size, std::vector<std::size_t>({4, 16, 64})[row.n - 1]);
    }
  }
}

TEST(DominatedConvergence, ShrinkingPerturbation) {
  auto s = mc_setup();
  auto tau = StoppingRule::never(s.sc.size());
  auto phi = random_dirac_kernel(s.g, s.tg, s.sc, 1.0, 7);
  auto pert = spread_kernel(s);
  double prev = INFINITY;
  for (double eps : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
    auto pn = linear_combination({1.0, eps}, {phi, pert});
    double q = q_seminorm(difference(pn, phi), s.fam, tau, s.V);
    EXPECT_LT(q, prev);
    prev = q;
  }
  EXPECT_LT(prev, 0.1);
}

TEST(InPhi, ZeroAndPowerKernel) {
  auto s = mc_setup(4);
  auto z = in_phi_check(zero_process(s.g, s.tg, s.sc, 1), s.V);
  EXPECT_TRUE(z.member);
  for (double x : z.d_path.data()) EXPECT_EQ(x, 0.0);

  for (double alpha : {0.5, 1.0, 2.0}) {
    const double T = 1.0;
    CompactGrid g(T, 128);
    TimeGrid tg(T, 16);
    auto sc = ScenarioSet::monte_carlo(2, 1);
    auto S = simulate_driver(brownian(), tg, sc);
    auto V = control_process(brownian(), S);
    auto pc = in_phi_check(power_kernel_phi(alpha, g, tg, sc), V);
    EXPECT_TRUE(pc.member);
    for (std::size_t l = 0; l <= tg.N; ++l) {
      double t = tg.t(l);
      double want = (std::pow(T, 2 * alpha + 1) - std::pow(T - t, 2 * alpha + 1)) / (2 * alpha + 1);
      EXPECT_NEAR(pc.d_path(1, l), want, 1e-9);
    }
  }
}

TEST(InPhi, SingularDensityAndOverflow) {
  auto s = mc_setup(3);
  const double TK = s.g.T_K, h = s.g.h();
  const std::size_t A = s.g.atoms();
  KernelFns f;
  f.deterministic = true;
  f.rho = [A, h](std::size_t, std::size_t, std::span<double> rho) {
    rho[0] = 0.0;
    for (std::size_t j = 1; j < A; ++j) rho[j] = h;
  };
  f.psi = [A, h, TK](std::size_t, std::size_t, std::span<double> psi) {
    psi[0] = 0.0;
    for (std::size_t j = 1; j < A; ++j) psi[j] = 1.0 / (TK - (j - 0.5) * h);
  };
  auto pc = in_phi_check(make_kernel(s.g, s.tg, s.sc, 1, f), s.V);
  EXPECT_TRUE(pc.member);
  double tv = 0.0;
  for (std::size_t j = 1; j < A; ++j) tv += h / (TK - (j - 0.5) * h);
  EXPECT_NEAR(pc.sup, tv * tv * 1.0, 1e-12);

  KernelFns big = f;
  big.psi = [A](std::size_t, std::size_t, std::span<double> psi) {
    for (std::size_t j = 0; j < A; ++j) psi[j] = 1e300;
  };
  auto bad = in_phi_check(make_kernel(s.g, s.tg, s.sc, 1, big), s.V);
  EXPECT_FALSE(bad.member);
  EXPECT_EQ(bad.bad_scenario, 0u);
  EXPECT_EQ(bad.bad_index, 1u);
}

TEST(ApproxCsv, Header) {
  std::vector<ApproxReport> rows(2);
  rows[1].n = 2;
  auto csv = to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("q_error") != std::string::npos, true);
}
