#include "mvf/dominated.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mvf/util.hpp"

namespace mvf {

namespace {

// 8-point Gauss-Legendre on [0, 1]
constexpr std::array<double, 8> kX{0.019855071751231856, 0.10166676129318664, 0.2372337950418355,
                                   0.40828267875217511, 0.59171732124782489, 0.7627662049581645,
                                   0.89833323870681336, 0.98014492824876814};
constexpr std::array<double, 8> kW{0.050614268145188129, 0.11119051722668724, 0.15685332293894363,
                                   0.18134189168918100, 0.18134189168918100, 0.15685332293894363,
                                   0.11119051722668724, 0.050614268145188129};

double pospow(double x, double a) { return x > 0.0 ? std::pow(x, a) : 0.0; }

void check_eta(const DominatedSpec& s) {
  if (s.eta.size() != s.grid.atoms()) throw std::invalid_argument("dominated: eta needs J+1 weights");
  for (double e : s.eta)
    if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument("dominated: eta must be nonnegative and finite");
  if (!s.psi) throw std::invalid_argument("dominated: psi missing");
}

void check_driver(const DominatedSpec& s, const DriverPath& S) {
  if (S.d() != 1) throw std::invalid_argument("dominated: real-valued driver required");
  if (!(S.grid == s.tg) || S.P() != s.sc.size()) throw std::invalid_argument("dominated: driver grid mismatch");
}

void finish(CondValue& c) {
  c.finite = true;
  c.sup = 0.0;
  for (double v : c.path.data()) {
    if (!std::isfinite(v)) c.finite = false;
    else c.sup = std::max(c.sup, v);
  }
}

// exact time-averaged square mass of the power density over slot k, on the nodes
double power_slot_sq(double alpha, const CompactGrid& g, double a, double b) {
  if (alpha <= 0.5) return INFINITY;
  const double c = alpha * alpha / (2 * alpha - 1), e = 2 * alpha - 1;
  double s = 0.0;
  for (std::size_t q = 0; q < kX.size(); ++q) {
    const double r = a + kX[q] * (b - a);
    double prev = c * pospow(g.z(0) - r, e), tot = 0.0;
    for (std::size_t j = 1; j < g.atoms(); ++j) {
      const double cur = c * pospow(g.z(j) - r, e);
      tot += cur - prev;
      prev = cur;
    }
    s += kW[q] * tot;
  }
  return s;
}

}  // namespace

DominatedSpec power_dominated_spec(double alpha, const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc) {
  auto phi = power_kernel_phi(alpha, g, tg, sc);
  const KernelFns* kf = phi.kernel();
  DominatedSpec s;
  s.label = "power_alpha=" + fmt_num(alpha);
  s.grid = g;
  s.tg = tg;
  s.sc = sc;
  s.eta.assign(g.atoms(), 0.0);
  kf->rho(0, 0, s.eta);
  s.psi = kf->psi;
  s.deterministic = true;
  s.alpha = alpha;
  return s;
}

DominatedSpec constant_dominated_spec(double c, std::vector<double> eta, const CompactGrid& g, const TimeGrid& tg,
                                      const ScenarioSet& sc) {
  DominatedSpec s;
  s.label = "constant";
  s.grid = g;
  s.tg = tg;
  s.sc = sc;
  s.eta = std::move(eta);
  s.psi = [c](std::size_t, std::size_t, std::span<double> out) { std::fill(out.begin(), out.end(), c); };
  s.deterministic = true;
  return s;
}

DominatedSpec random_dominated_spec(const CompactGrid& g, const DriverPath& S, std::uint64_t seed) {
  if (S.d() != 1) throw std::invalid_argument("random_dominated_spec: real-valued driver required");
  std::mt19937_64 rng(mix64(seed ^ 0x2545f4914f6cdd1dULL));
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 1.5);
  const std::size_t A = g.atoms(), N = S.N(), P = S.P();
  DominatedSpec s;
  s.label = "random";
  s.grid = g;
  s.tg = S.grid;
  s.sc = S.scenarios;
  s.eta.resize(A);
  for (std::size_t j = 0; j < A; ++j) s.eta[j] = pos(rng) * g.h();
  std::vector<double> a(A), b(A), c(N), lvl(P * N);
  for (auto& x : a) x = u(rng);
  for (auto& x : b) x = u(rng);
  for (auto& x : c) x = 0.5 * u(rng);
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t k = 0; k < N; ++k) lvl[w * N + k] = std::tanh(S.s(w, k) - S.spec.s0);
  s.psi = [a, b, c, lvl, N](std::size_t w, std::size_t k, std::span<double> out) {
    const double x = lvl[w * N + k];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = a[j] + b[j] * x + c[k];
  };
  return s;
}

MeasureProcess make_dominated(const DominatedSpec& spec) {
  check_eta(spec);
  KernelFns f;
  f.psi = spec.psi;
  f.rho = [eta = spec.eta](std::size_t, std::size_t, std::span<double> rho) {
    std::copy(eta.begin(), eta.end(), rho.begin());
  };
  f.deterministic = spec.deterministic;
  if (spec.alpha > 0.0) {
    f.instant = [alpha = spec.alpha, g = spec.grid](std::size_t, double r, std::span<double> out) {
      auto m = power_instant_measure(alpha, g, r);
      std::copy(m.weights().begin(), m.weights().end(), out.begin());
    };
  }
  return make_kernel(spec.grid, spec.tg, spec.sc, 1, std::move(f));
}

PathEnsemble classic_fubini_rhs(const DominatedSpec& spec, const DriverPath& S, const CellSet& D, bool reverse) {
  check_eta(spec);
  check_driver(spec, S);
  const std::size_t A = spec.grid.atoms(), P = S.P(), N = S.N();
  if (D.indicator.size() != A) throw std::invalid_argument("classic_fubini_rhs: set is not resolved by the grid");
  std::vector<std::size_t> atoms;
  for (std::size_t j = 0; j < A; ++j) {
    const double v = D.indicator[j];
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("classic_fubini_rhs: set is not resolved by the grid");
    if (v == 1.0) atoms.push_back(j);
  }
  if (reverse) std::reverse(atoms.begin(), atoms.end());
  PathEnsemble out(P, N + 1);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> psi(A), inner(A);
    for (std::size_t w = b; w < e; ++w) {
      std::fill(inner.begin(), inner.end(), 0.0);
      for (std::size_t k = 0; k < N; ++k) {
        spec.psi(w, k, psi);
        const double ds = S.ds(w, k);
        for (std::size_t j : atoms) inner[j] += psi[j] * ds;
        double s = 0.0;
        for (std::size_t j : atoms) s += spec.eta[j] * inner[j];
        out.at(w, k + 1) = s;
      }
    }
  });
  return out;
}

FubiniReport compare_classic_vs_mv(const DominatedSpec& spec, const DriverPath& S, const std::vector<CellSet>& sets) {
  auto phi = make_dominated(spec);
  auto ch = mv_integral(phi, S);
  FubiniReport rep;
  double tot = 0.0;
  std::size_t cnt = 0;
  for (const auto& D : sets) {
    auto lhs = evaluate_charge(ch, D.indicator);
    auto rhs = classic_fubini_rhs(spec, S, D);
    FubiniRow row;
    row.id = D.label;
    for (std::size_t w = 0; w < S.P(); ++w)
      for (std::size_t l = 0; l <= S.N(); ++l) {
        double d = std::abs(lhs(w, l) - rhs(w, l));
        if (std::isnan(d)) d = INFINITY;
        tot += d;
        ++cnt;
        if (d > row.max_disc) {
          row.max_disc = d;
          row.scenario = w;
          row.time = l;
        }
      }
    rep.max_abs = std::max(rep.max_abs, row.max_disc);
    rep.rows.push_back(row);
  }
  rep.mean_abs = cnt ? tot / static_cast<double>(cnt) : 0.0;
  return rep;
}

double refinement_value(const DominatedSpec& spec, const PathEnsemble& V, std::size_t J) {
  const std::size_t N = spec.tg.N;
  if (spec.alpha > 0.0) {
    CompactGrid g(spec.grid.T_K, J);
    const double h = g.h();
    double s = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      const double a = spec.tg.t(k), dt = spec.tg.t(k + 1) - a;
      double slot = 0.0;
      for (std::size_t q = 0; q < kX.size(); ++q) {
        auto m = power_instant_measure(spec.alpha, g, a + kX[q] * dt);
        double v = 0.0;
        for (std::size_t j = 1; j < m.size(); ++j) v += m[j] * m[j] / h;
        slot += kW[q] * v;
      }
      s += slot * (V(0, k + 1) - V(0, k));
    }
    return s;
  }
  if (J != spec.grid.J) throw std::invalid_argument("refinement_value: spec cannot be rebuilt at another J");
  const std::size_t A = spec.grid.atoms();
  std::vector<double> psi(A);
  double best = 0.0;
  for (std::size_t w = 0; w < (spec.deterministic ? 1 : spec.sc.size()); ++w) {
    double s = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      spec.psi(w, k, psi);
      double v = 0.0;
      for (std::size_t j = 0; j < A; ++j) v += psi[j] * psi[j] * spec.eta[j];
      s += v * (V(w, k + 1) - V(w, k));
    }
    best = std::max(best, s);
  }
  return best;
}

ConditionReport condition_evaluator(const DominatedSpec& spec, const DriverPath& S, const PathEnsemble& V,
                                    const ConditionOptions& opt) {
  check_eta(spec);
  check_driver(spec, S);
  const std::size_t P = S.P(), N = S.N(), A = spec.grid.atoms();
  if (V.scenarios() != P || V.length() != N + 1) throw std::invalid_argument("condition_evaluator: V size mismatch");
  ConditionReport r;
  for (CondValue* c : {&r.c63, &r.c64, &r.c66, &r.c67a, &r.c67b, &r.veraar_a, &r.veraar_b})
    c->path = PathEnsemble(P, N + 1);
  const auto QV = quadratic_variation(S);
  double etaK = 0.0;
  for (double e : spec.eta) etaK += e;
  std::vector<double> exact66;
  if (spec.alpha > 0.0) {
    exact66.resize(N);
    for (std::size_t k = 0; k < N; ++k) exact66[k] = power_slot_sq(spec.alpha, spec.grid, spec.tg.t(k), spec.tg.t(k + 1));
  }
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> psi(A), va(A), vb(A);
    for (std::size_t w = b; w < e; ++w) {
      double a63 = 0, a64 = 0, a66 = 0, a67a = 0, a67b = 0;
      std::fill(va.begin(), va.end(), 0.0);
      std::fill(vb.begin(), vb.end(), 0.0);
      for (std::size_t k = 0; k < N; ++k) {
        spec.psi(w, k, psi);
        double l1 = 0, l2 = 0;
        for (std::size_t j = 0; j < A; ++j) {
          l1 += std::abs(psi[j]) * spec.eta[j];
          l2 += psi[j] * psi[j] * spec.eta[j];
        }
        const double dv = V(w, k + 1) - V(w, k);
        const double da = std::abs(S.da(w, k));
        const double dq = QV(w, k + 1) - QV(w, k);
        a63 += l1 * l1 * dv;
        a64 += etaK * l2 * dv;
        a66 += (exact66.empty() ? l2 : exact66[k]) * dv;
        a67a += l1 * da;
        a67b += l1 * l1 * dq;
        double ra = 0, rb = 0;
        for (std::size_t j = 0; j < A; ++j) {
          va[j] += std::abs(psi[j]) * da;
          vb[j] += psi[j] * psi[j] * dq;
          ra += spec.eta[j] * va[j];
          rb += spec.eta[j] * std::sqrt(vb[j]);
        }
        r.c63.path.at(w, k + 1) = a63;
        r.c64.path.at(w, k + 1) = a64;
        r.c66.path.at(w, k + 1) = a66;
        r.c67a.path.at(w, k + 1) = a67a;
        r.c67b.path.at(w, k + 1) = a67b;
        r.veraar_a.path.at(w, k + 1) = ra;
        r.veraar_b.path.at(w, k + 1) = rb;
      }
    }
  });
  for (CondValue* c : {&r.c63, &r.c64, &r.c66, &r.c67a, &r.c67b, &r.veraar_a, &r.veraar_b}) finish(*c);
  if (spec.alpha > 0.0) {
    for (std::size_t i = 0; i <= opt.doublings; ++i) {
      const std::size_t J = opt.probe_J0 << i;
      r.probe.emplace_back(J, refinement_value(spec, V, J));
    }
  } else {
    r.probe.emplace_back(spec.grid.J, refinement_value(spec, V, spec.grid.J));
  }
  if (r.probe.size() > 1 && r.probe.front().second > 0) {
    r.c66.growth_ratio = r.probe.back().second / r.probe.front().second;
    r.probe_diverges = r.c66.growth_ratio > opt.growth_factor;
  }
  if (r.probe_diverges) r.c66.finite = false;
  r.c64_implies_c63 = !r.c64.finite || r.c63.finite;
  r.c66_implies_c64 = !r.c66.finite || r.c64.finite;
  const auto& p63 = r.c63.path.data();
  const auto& p64 = r.c64.path.data();
  for (std::size_t i = 0; i < p63.size(); ++i)
    if (std::isfinite(p64[i]) && p63[i] > p64[i] * (1 + 1e-12) + 1e-300) r.c63_le_c64 = false;
  return r;
}

ConditionReport kernel_conditions(const MeasureProcess& phi, const PathEnsemble& V) {
  const KernelFns* kf = phi.kernel();
  if (!kf) throw std::invalid_argument("kernel_conditions: kernel representation required");
  const std::size_t P = phi.P(), N = phi.N(), A = phi.grid().atoms(), d = phi.dim();
  if (V.scenarios() != P || V.length() != N + 1) throw std::invalid_argument("kernel_conditions: V size mismatch");
  ConditionReport r;
  r.c63.path = PathEnsemble(P, N + 1);
  r.c64.path = PathEnsemble(P, N + 1);
  std::vector<double> psi(d * A), rho(A);
  for (std::size_t w = 0; w < P; ++w) {
    double a63 = 0, a64 = 0;
    for (std::size_t k = 0; k < N; ++k) {
      kf->psi(w, k, psi);
      kf->rho(w, k, rho);
      double rk = 0, sq = 0, s63 = 0;
      for (std::size_t j = 0; j < A; ++j) rk += rho[j];
      for (std::size_t i = 0; i < d; ++i) {
        double l1 = 0;
        for (std::size_t j = 0; j < A; ++j) {
          l1 += std::abs(psi[i * A + j]) * rho[j];
          sq += psi[i * A + j] * psi[i * A + j] * rho[j];
        }
        s63 += l1 * l1;
      }
      const double dv = V(w, k + 1) - V(w, k);
      a63 += s63 * dv;
      a64 += rk * sq * dv;
      r.c63.path.at(w, k + 1) = a63;
      r.c64.path.at(w, k + 1) = a64;
    }
  }
  finish(r.c63);
  finish(r.c64);
  r.c64_implies_c63 = !r.c64.finite || r.c63.finite;
  const auto& p63 = r.c63.path.data();
  const auto& p64 = r.c64.path.data();
  for (std::size_t i = 0; i < p63.size(); ++i)
    if (std::isfinite(p64[i]) && p63[i] > p64[i] * (1 + 1e-12) + 1e-300) r.c63_le_c64 = false;
  return r;
}

Certificate measure_valuedness_certificate(const DominatedSpec& spec, const DriverPath& S, const PathEnsemble& V,
                                           const ConditionOptions& opt) {
  Certificate c;
  c.dominated = true;
  try {
    check_eta(spec);
  } catch (const std::invalid_argument&) {
    c.dominated = false;
  }
  if (!c.dominated) {
    c.detail = "reference measure invalid";
    return c;
  }
  auto rep = condition_evaluator(spec, S, V, opt);
  c.c66_finite = rep.c66.finite;
  c.probe_diverges = rep.probe_diverges;
  c.growth_ratio = rep.c66.growth_ratio;
  c.probe = rep.probe;
  c.hypotheses_met = c.dominated && c.product_measurable && c.c66_finite && !c.probe_diverges;
  std::ostringstream os;
  os << "dominated=" << c.dominated << " square-integrable=" << c.c66_finite << " probe_ratio=" << fmt_num(c.growth_ratio);
  c.detail = os.str();
  return c;
}

}  // namespace mvf
