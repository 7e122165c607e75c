#include "mvf/mvintegral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mvf/util.hpp"

namespace mvf {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_grids(const MeasureProcess& phi, const DriverPath& S) {
  if (phi.P() != S.P() || !(phi.time_grid() == S.grid) || phi.dim() != S.d())
    throw std::invalid_argument("mv_integral: grid mismatch between integrand and driver");
}

// slot table of a deterministic integrand, empty otherwise
std::vector<double> det_table(const MeasureProcess& phi) {
  std::vector<double> t;
  if (!phi.deterministic()) return t;
  const std::size_t W = phi.width();
  t.resize(phi.N() * W);
  for (std::size_t k = 0; k < phi.N(); ++k) phi.fill(0, k, std::span<double>(t.data() + k * W, W));
  return t;
}

// acc += sum_i phi^i_k dS^i_k
void add_step(std::span<const double> m, const DriverPath& S, std::size_t w, std::size_t k, std::size_t A,
              std::span<double> acc) {
  for (std::size_t i = 0; i < S.d(); ++i) {
    const double ds = S.ds(w, k, i);
    const double* src = m.data() + i * A;
    for (std::size_t j = 0; j < A; ++j) acc[j] += src[j] * ds;
  }
}

RowMat family_matrix(const std::vector<GridFunction>& gs, std::size_t A) {
  RowMat F(A, gs.size());
  for (std::size_t q = 0; q < gs.size(); ++q) {
    if (gs[q].size() != A) throw std::invalid_argument("pairing: function length != atoms");
    for (std::size_t j = 0; j < A; ++j) F(j, q) = gs[q][j];
  }
  return F;
}

std::vector<GridFunction> family_functions(const TestFamily& fam) {
  std::vector<GridFunction> gs;
  for (std::size_t q = 0; q < fam.size(); ++q) gs.push_back(fam.u(q));
  return gs;
}

// per-f integrand-side paths H(f).S, via one matrix product per scenario
std::vector<PathEnsemble> integrand_side(const MeasureProcess& phi, const DriverPath& S,
                                         const std::vector<GridFunction>& gs, const StoppingRule* upto) {
  const std::size_t P = phi.P(), N = phi.N(), d = phi.dim(), A = phi.grid().atoms(), G = gs.size();
  RowMat F = family_matrix(gs, A);
  std::vector<PathEnsemble> out(G, PathEnsemble(P, N + 1));
  auto tab = det_table(phi);
  RowMat Rdet;
  if (!tab.empty()) {
    Eigen::Map<const RowMat> M(tab.data(), static_cast<Eigen::Index>(N * d), static_cast<Eigen::Index>(A));
    Rdet = M * F;
  }
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    RowMat M(N * d, A), R;
    for (std::size_t w = b; w < e; ++w) {
      const RowMat* Rp = &Rdet;
      if (tab.empty()) {
        for (std::size_t k = 0; k < N; ++k) phi.fill(w, k, std::span<double>(M.data() + k * d * A, d * A));
        R = M * F;
        Rp = &R;
      }
      const std::size_t tau = upto ? (*upto)[w] : kNever;
      for (std::size_t q = 0; q < G; ++q) {
        double acc = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
          if (before_tau(k, tau)) {
            double inc = 0.0;
            for (std::size_t i = 0; i < d; ++i) inc += (*Rp)(k * d + i, q) * S.ds(w, k, i);
            acc += inc;
          }
          out[q].at(w, k + 1) = acc;
        }
      }
    }
  });
  return out;
}

std::vector<PathEnsemble> charge_side(const ChargePath& ch, const std::vector<GridFunction>& gs) {
  const std::size_t P = ch.P(), N = ch.N(), A = ch.grid().atoms(), G = gs.size();
  RowMat F = family_matrix(gs, A);
  std::vector<PathEnsemble> out(G, PathEnsemble(P, N + 1));
  for (std::size_t w = 0; w < P; ++w) {
    Eigen::Map<const RowMat> M(ch.at(w, 0).data(), static_cast<Eigen::Index>(N + 1), static_cast<Eigen::Index>(A));
    RowMat R = M * F;
    for (std::size_t q = 0; q < G; ++q)
      for (std::size_t l = 0; l <= N; ++l) out[q].at(w, l) = R(l, q);
  }
  return out;
}

FubiniReport compare(const std::vector<PathEnsemble>& lhs, const std::vector<PathEnsemble>& rhs,
                     const std::vector<std::string>& ids, double corrupt) {
  FubiniReport rep;
  double tot = 0.0;
  std::size_t cnt = 0;
  for (std::size_t q = 0; q < lhs.size(); ++q) {
    FubiniRow row;
    row.id = ids[q];
    for (std::size_t w = 0; w < lhs[q].scenarios(); ++w)
      for (std::size_t l = 0; l < lhs[q].length(); ++l) {
        double r = rhs[q](w, l) + (l > 0 ? corrupt : 0.0);
        double dlt = std::abs(lhs[q](w, l) - r);
        if (std::isnan(dlt)) dlt = INFINITY;
        tot += dlt;
        ++cnt;
        if (dlt > row.max_disc) {
          row.max_disc = dlt;
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

}  // namespace

ChargePath::ChargePath(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, bool stopped)
    : grid_(g), tg_(tg), sc_(sc), stopped_(stopped) {
  const std::size_t n = sc.size() * (tg.N + 1) * g.atoms();
  if (n > kMaxDoubles)
    throw std::length_error("charge path: P*(N+1)*(J+1) = " + std::to_string(n) +
                            " exceeds the dense limit, use the streaming pairings");
  w_.assign(n, 0.0);
}

std::span<const double> ChargePath::at(std::size_t w, std::size_t l) const {
  const std::size_t A = grid_.atoms();
  return std::span<const double>(w_).subspan((w * (tg_.N + 1) + l) * A, A);
}

std::span<double> ChargePath::at_mut(std::size_t w, std::size_t l) {
  const std::size_t A = grid_.atoms();
  return std::span<double>(w_).subspan((w * (tg_.N + 1) + l) * A, A);
}

SignedMeasure ChargePath::measure(std::size_t w, std::size_t l) const {
  auto s = at(w, l);
  return SignedMeasure(grid_, std::vector<double>(s.begin(), s.end()));
}

ChargePath mv_integral(const MeasureProcess& phi, const DriverPath& S, const StoppingRule* upto) {
  check_grids(phi, S);
  ChargePath ch(phi.grid(), phi.time_grid(), phi.scenarios(), upto != nullptr);
  const std::size_t N = phi.N(), A = phi.grid().atoms(), W = phi.width();
  auto tab = det_table(phi);
  parallel_for(phi.P(), [&](std::size_t b, std::size_t e) {
    std::vector<double> buf(W), acc(A);
    for (std::size_t w = b; w < e; ++w) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const std::size_t tau = upto ? (*upto)[w] : kNever;
      for (std::size_t k = 0; k < N; ++k) {
        if (before_tau(k, tau)) {
          std::span<const double> m;
          if (!tab.empty()) m = std::span<const double>(tab.data() + k * W, W);
          else {
            phi.fill(w, k, buf);
            m = buf;
          }
          add_step(m, S, w, k, A, acc);
        }
        std::copy(acc.begin(), acc.end(), ch.at_mut(w, k + 1).begin());
      }
    }
  });
  return ch;
}

PathEnsemble evaluate_charge(const ChargePath& charge, std::span<const double> g) {
  if (g.size() != charge.grid().atoms()) throw std::invalid_argument("evaluate_charge: length mismatch");
  PathEnsemble out(charge.P(), charge.N() + 1);
  for (std::size_t w = 0; w < charge.P(); ++w)
    for (std::size_t l = 0; l <= charge.N(); ++l) out.at(w, l) = pair(charge.at(w, l), g);
  return out;
}

std::vector<PathEnsemble> mv_integral_pairings(const MeasureProcess& phi, const DriverPath& S,
                                               const std::vector<GridFunction>& gs, const StoppingRule* upto) {
  check_grids(phi, S);
  const std::size_t P = phi.P(), N = phi.N(), A = phi.grid().atoms(), W = phi.width();
  for (const auto& g : gs)
    if (g.size() != A) throw std::invalid_argument("pairings: function length != atoms");
  std::vector<PathEnsemble> out(gs.size(), PathEnsemble(P, N + 1));
  auto tab = det_table(phi);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> buf(W), acc(A);
    for (std::size_t w = b; w < e; ++w) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const std::size_t tau = upto ? (*upto)[w] : kNever;
      for (std::size_t k = 0; k < N; ++k) {
        if (before_tau(k, tau)) {
          std::span<const double> m;
          if (!tab.empty()) m = std::span<const double>(tab.data() + k * W, W);
          else {
            phi.fill(w, k, buf);
            m = buf;
          }
          add_step(m, S, w, k, A, acc);
        }
        for (std::size_t q = 0; q < gs.size(); ++q) out[q].at(w, k + 1) = pair(acc, gs[q]);
      }
    }
  });
  return out;
}

PathEnsemble mv_integral_terminal(const MeasureProcess& phi, const DriverPath& S) {
  check_grids(phi, S);
  const std::size_t P = phi.P(), N = phi.N(), A = phi.grid().atoms(), W = phi.width();
  PathEnsemble out(P, A);
  auto tab = det_table(phi);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> buf(W);
    for (std::size_t w = b; w < e; ++w) {
      auto acc = out.row_mut(w);
      for (std::size_t k = 0; k < N; ++k) {
        std::span<const double> m;
        if (!tab.empty()) m = std::span<const double>(tab.data() + k * W, W);
        else {
          phi.fill(w, k, buf);
          m = buf;
        }
        add_step(m, S, w, k, A, acc);
      }
    }
  });
  return out;
}

double r_seminorm(const std::vector<PathEnsemble>& pairings, const TestFamily& fam, const ScenarioSet& sc) {
  if (pairings.size() != fam.size()) throw std::invalid_argument("r_seminorm: pairing count != family size");
  double s = 0.0;
  for (std::size_t q = 0; q < fam.size(); ++q) {
    double r = r2_norm(pairings[q], sc);
    s += fam.gamma(q) * r * r;
  }
  return std::sqrt(s);
}

double r_seminorm(const ChargePath& charge, const TestFamily& fam) {
  if (!(fam.grid() == charge.grid())) throw std::invalid_argument("r_seminorm: grid mismatch");
  return r_seminorm(charge_side(charge, family_functions(fam)), fam, charge.scenarios());
}

FubiniReport fubini_check_regular(const MeasureProcess& phi, const DriverPath& S, const TestFamily& fam,
                                  const StoppingRule* upto, double corrupt) {
  auto gs = family_functions(fam);
  auto ch = mv_integral(phi, S, upto);
  auto lhs = charge_side(ch, gs);
  auto rhs = integrand_side(phi, S, gs, upto);
  std::vector<std::string> ids;
  for (std::size_t q = 0; q < gs.size(); ++q) ids.push_back("u" + std::to_string(q + 1));
  return compare(lhs, rhs, ids, corrupt);
}

CellSet closed_interval_set(const CompactGrid& g, double a, double b) {
  return {"[" + fmt_num(a) + "," + fmt_num(b) + "]", interval_indicator(g, a, b)};
}

CellSet singleton_set(const CompactGrid& g, std::size_t j) {
  if (j >= g.atoms()) throw std::invalid_argument("singleton_set: atom out of range");
  GridFunction f(g.atoms(), 0.0);
  f[j] = 1.0;
  return {"{z" + std::to_string(j) + "}", f};
}

CellSet empty_set(const CompactGrid& g) { return {"empty", GridFunction(g.atoms(), 0.0)}; }
CellSet full_set(const CompactGrid& g) { return {"K", GridFunction(g.atoms(), 1.0)}; }

FubiniReport fubini_check_general(const MeasureProcess& phi, const DriverPath& S, const std::vector<CellSet>& sets,
                                  const StoppingRule* upto, double corrupt) {
  std::vector<GridFunction> gs;
  std::vector<std::string> ids;
  for (const auto& s : sets) {
    for (double x : s.indicator)
      if (x != 0.0 && x != 1.0) throw std::invalid_argument("fubini_check_general: set is not an indicator");
    gs.push_back(s.indicator);
    ids.push_back(s.label);
  }
  auto ch = mv_integral(phi, S, upto);
  auto lhs = charge_side(ch, gs);
  auto rhs = integrand_side(phi, S, gs, upto);
  return compare(lhs, rhs, ids, corrupt);
}

Ineq312 inequality_3_12_check(const MeasureProcess& phi, const DriverPath& S, const PathEnsemble& V,
                              const StoppingRule& tau, const TestFamily& fam) {
  if (phi.representation() != Representation::elementary)
    throw std::invalid_argument("inequality_3_12_check: integrand must be elementary");
  const auto& sc = S.scenarios;
  const std::size_t P = S.P(), N = S.N(), d = S.d();
  auto gs = family_functions(fam);
  auto pr = mv_integral_pairings(phi, S, gs, &tau);
  auto ev = evaluate_family(phi, fam);
  auto mu = mu_weights(tau, V, sc);
  std::vector<double> a(P, 0.0), bq(P, 0.0);
  for (std::size_t q = 0; q < fam.size(); ++q)
    for (std::size_t w = 0; w < P; ++w) {
      double m = 0.0;
      for (double x : pr[q].row(w)) m = std::max(m, x * x);
      a[w] += fam.gamma(q) * m;
      double s = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        double h2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) h2 += ev[q](w, k, i) * ev[q](w, k, i);
        s += mu(w, k) * h2;
      }
      bq[w] += fam.gamma(q) * s / sc.probability(w);
    }
  double ea = 0.0, eb = 0.0;
  for (std::size_t w = 0; w < P; ++w) {
    ea += sc.probability(w) * a[w];
    eb += sc.probability(w) * bq[w];
  }
  Ineq312 r;
  r.r_value = std::sqrt(ea);
  r.q_value = std::sqrt(eb);
  if (sc.is_tree()) {
    r.holds = r.r_value <= r.q_value * (1 + 1e-12) + 1e-15;
    return r;
  }
  double md = ea - eb, v = 0.0;
  for (std::size_t w = 0; w < P; ++w) v += (a[w] - bq[w] - md) * (a[w] - bq[w] - md);
  double se_sq = P > 1 ? std::sqrt(v / static_cast<double>(P - 1) / static_cast<double>(P)) : 0.0;
  r.se = (r.r_value + r.q_value) > 0 ? se_sq / (r.r_value + r.q_value) : 0.0;
  r.holds = md <= 3.0 * se_sq + 1e-15;
  return r;
}

TransferReport convergence_transfer_check(const MeasureProcess& phi, const std::vector<MeasureProcess>& seq,
                                          const DriverPath& S, const StoppingRule& tau, const PathEnsemble& V,
                                          const TestFamily& fam) {
  if (!phi.scenarios().is_tree()) throw std::logic_error("convergence_transfer_check: tree mode required");
  auto gs = family_functions(fam);
  TransferReport rep;
  for (std::size_t n = 0; n < seq.size(); ++n) {
    auto diff = difference(seq[n], phi);
    TransferRow row;
    row.n = n + 1;
    row.q = q_seminorm(diff, fam, tau, V);
    row.r = r_seminorm(mv_integral_pairings(diff, S, gs, &tau), fam, S.scenarios);
    row.r_le_q = row.r <= row.q * (1 + 1e-12) + 1e-15;
    auto own = mv_integral_pairings(seq[n], S, gs, &tau);
    for (std::size_t q = 0; q < fam.size(); ++q)
      if (fam.sup_norm(q) > 0) rep.uniform_bound = std::max(rep.uniform_bound, r2_norm(own[q], S.scenarios) / fam.sup_norm(q));
    rep.rows.push_back(row);
  }
  return rep;
}

std::string to_csv(const FubiniReport& rep) {
  std::ostringstream os;
  os << "id,max_discrepancy,scenario,time_index\n";
  for (const auto& r : rep.rows)
    os << r.id << ',' << fmt_num(r.max_disc) << ',' << r.scenario << ',' << r.time << '\n';
  return os.str();
}

std::string to_csv(const TransferReport& rep) {
  std::ostringstream os;
  os << "n,q_error,r_error,r_le_q\n";
  for (const auto& r : rep.rows) os << r.n << ',' << fmt_num(r.q) << ',' << fmt_num(r.r) << ',' << r.r_le_q << '\n';
  return os.str();
}

}  // namespace mvf
