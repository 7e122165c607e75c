#include "mvf/integrands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mvf/util.hpp"

namespace mvf {

std::string to_string(Representation r) {
  switch (r) {
    case Representation::elementary: return "elementary";
    case Representation::kernel: return "kernel";
    case Representation::volterra_induced: return "volterra_induced";
    case Representation::piecewise: return "piecewise";
    case Representation::derived: return "derived";
  }
  return "?";
}

void MeasureSource::instant(std::size_t, std::size_t, double, std::span<double>) const {
  throw std::logic_error("measure source has no time-continuous form");
}

namespace {

class ElementarySource final : public MeasureSource {
 public:
  ElementarySource(std::vector<ElementaryTerm> t, std::size_t width) : terms(std::move(t)), width_(width) {
    det_ = std::all_of(terms.begin(), terms.end(), [](const ElementaryTerm& e) { return e.member.empty(); });
  }
  void fill(std::size_t w, std::size_t k, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : terms) {
      if (k < t.a || k >= t.b) continue;
      if (!t.member.empty() && !t.member[w]) continue;
      auto m = t.m.flat();
      for (std::size_t j = 0; j < width_; ++j) out[j] += m[j];
    }
  }
  bool deterministic() const override { return det_; }
  std::vector<ElementaryTerm> terms;

 private:
  std::size_t width_;
  bool det_;
};

class KernelSource final : public MeasureSource {
 public:
  KernelSource(KernelFns f, std::size_t d, std::size_t A, std::size_t N) : fns(std::move(f)), d_(d), A_(A) {
    // deterministic kernels are tabulated once per slot
    if (fns.deterministic && N * d * A <= (std::size_t{1} << 25)) {
      table_.assign(N * d * A, 0.0);
      for (std::size_t k = 0; k < N; ++k) compute(0, k, std::span<double>(table_.data() + k * d * A, d * A));
    }
  }
  void fill(std::size_t w, std::size_t k, std::span<double> out) const override {
    if (!table_.empty()) {
      std::copy_n(table_.begin() + k * d_ * A_, d_ * A_, out.begin());
      return;
    }
    compute(w, k, out);
  }
  bool deterministic() const override { return fns.deterministic; }
  bool has_instant() const override { return static_cast<bool>(fns.instant); }
  void instant(std::size_t w, std::size_t, double r, std::span<double> out) const override {
    if (!fns.instant) MeasureSource::instant(w, 0, r, out);
    fns.instant(w, r, out);
  }
  KernelFns fns;

 private:
  void compute(std::size_t w, std::size_t k, std::span<double> out) const {
    std::vector<double> rho(A_);
    fns.psi(w, k, out);
    fns.rho(w, k, rho);
    for (std::size_t j = 0; j < A_; ++j)
      if (!(rho[j] >= 0.0)) throw std::invalid_argument("kernel: rho must be nonnegative");
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < A_; ++j) out[i * A_ + j] *= rho[j];
  }
  std::size_t d_, A_;
  std::vector<double> table_;
};

class LinearSource final : public MeasureSource {
 public:
  LinearSource(std::vector<double> c, std::vector<MeasureProcess> p) : c_(std::move(c)), p_(std::move(p)) {}
  void fill(std::size_t w, std::size_t k, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> buf(out.size());
    for (std::size_t q = 0; q < p_.size(); ++q) {
      p_[q].fill(w, k, buf);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += c_[q] * buf[j];
    }
  }
  bool deterministic() const override {
    return std::all_of(p_.begin(), p_.end(), [](const MeasureProcess& m) { return m.deterministic(); });
  }

 private:
  std::vector<double> c_;
  std::vector<MeasureProcess> p_;
};

class TruncSource final : public MeasureSource {
 public:
  TruncSource(MeasureProcess b, double c) : base_(std::move(b)), c_(c) {}
  void fill(std::size_t w, std::size_t k, std::span<double> out) const override {
    base_.fill(w, k, out);
    const std::size_t A = base_.grid().atoms();
    for (std::size_t i = 0; i < base_.dim(); ++i) {
      auto comp = out.subspan(i * A, A);
      if (total_variation(comp) > c_) std::fill(comp.begin(), comp.end(), 0.0);
    }
  }
  bool deterministic() const override { return base_.deterministic(); }

 private:
  MeasureProcess base_;
  double c_;
};

class PiecewiseSource final : public MeasureSource {
 public:
  PiecewiseSource(std::vector<SignedMeasureVec> net, std::vector<std::size_t> idx, std::size_t N)
      : net_(std::move(net)), idx_(std::move(idx)), N_(N) {}
  void fill(std::size_t w, std::size_t k, std::span<double> out) const override {
    auto m = net_[idx_[w * N_ + k]].flat();
    std::copy(m.begin(), m.end(), out.begin());
  }

 private:
  std::vector<SignedMeasureVec> net_;
  std::vector<std::size_t> idx_;
  std::size_t N_;
};

double pospow(double x, double a) { return x > 0.0 ? std::pow(x, a) : 0.0; }

// 8-point Gauss-Legendre on [0,1]
constexpr std::array<double, 8> kGLx{0.019855071751231856, 0.10166676129318664, 0.2372337950418355,
                                     0.40828267875217511,  0.59171732124782495, 0.7627662049581645,
                                     0.89833323870681336,  0.98014492824876809};
constexpr std::array<double, 8> kGLw{0.050614268145188129, 0.11119051722668724, 0.15685332293894363,
                                     0.18134189168918100,  0.18134189168918100, 0.15685332293894363,
                                     0.11119051722668724,  0.050614268145188129};

double euclid_var_sq(std::span<const double> w, std::size_t d, std::size_t A) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double v = total_variation(w.subspan(i * A, A));
    s += v * v;
  }
  return s;
}

}  // namespace

MeasureProcess::MeasureProcess(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d,
                               Representation rep, std::shared_ptr<const MeasureSource> src)
    : grid_(g), tg_(tg), sc_(sc), d_(d), rep_(rep), src_(std::move(src)) {
  if (d < 1) throw std::invalid_argument("measure process: d must be >= 1");
  if (!src_) throw std::invalid_argument("measure process: missing source");
}

SignedMeasureVec MeasureProcess::at(std::size_t w, std::size_t k) const {
  std::vector<double> buf(width());
  fill(w, k, buf);
  return SignedMeasureVec(grid_, d_, std::move(buf));
}

const std::vector<ElementaryTerm>* MeasureProcess::elementary_terms() const {
  auto* e = dynamic_cast<const ElementarySource*>(src_.get());
  return e ? &e->terms : nullptr;
}

const KernelFns* MeasureProcess::kernel() const {
  auto* k = dynamic_cast<const KernelSource*>(src_.get());
  return k ? &k->fns : nullptr;
}

MeasureProcess make_elementary(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d,
                               std::vector<ElementaryTerm> terms) {
  for (const auto& t : terms) {
    if (!(t.m.grid() == g) || t.m.dim() != d) throw std::invalid_argument("elementary: term grid/dim mismatch");
    if (t.a >= t.b || t.b > tg.N) throw std::invalid_argument("elementary: bad interval");
    if (!t.member.empty()) {
      if (t.member.size() != sc.size()) throw std::invalid_argument("elementary: set size != scenario count");
      if (sc.is_tree()) {
        std::vector<int> seen(sc.atom_count(t.a), -1);
        for (std::size_t w = 0; w < sc.size(); ++w) {
          int& s = seen[sc.atom(w, t.a)];
          int v = t.member[w] ? 1 : 0;
          if (s == -1) s = v;
          else if (s != v) throw std::invalid_argument("elementary: set is not in F_{t_a}");
        }
      }
    }
  }
  std::size_t width = d * g.atoms();
  return MeasureProcess(g, tg, sc, d, Representation::elementary,
                        std::make_shared<ElementarySource>(std::move(terms), width));
}

MeasureProcess make_kernel(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d,
                           KernelFns fns, Representation rep) {
  if (!fns.psi || !fns.rho) throw std::invalid_argument("kernel: psi and rho required");
  return MeasureProcess(g, tg, sc, d, rep, std::make_shared<KernelSource>(std::move(fns), d, g.atoms(), tg.N));
}

MeasureProcess zero_process(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, std::size_t d) {
  return make_elementary(g, tg, sc, d, {});
}

MeasureProcess linear_combination(const std::vector<double>& c, const std::vector<MeasureProcess>& phis) {
  if (phis.empty() || c.size() != phis.size()) throw std::invalid_argument("linear_combination: size mismatch");
  const auto& f = phis.front();
  for (const auto& p : phis)
    if (!(p.grid() == f.grid()) || !(p.time_grid() == f.time_grid()) || p.dim() != f.dim() || p.P() != f.P())
      throw std::invalid_argument("linear_combination: grid mismatch");
  return MeasureProcess(f.grid(), f.time_grid(), f.scenarios(), f.dim(), Representation::derived,
                        std::make_shared<LinearSource>(c, phis));
}

SignedMeasure power_instant_measure(double alpha, const CompactGrid& g, double r) {
  return SignedMeasure::from_primitive(g, [&](double z) { return pospow(z - r, alpha); });
}

MeasureProcess power_kernel_phi(double alpha, const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc) {
  if (!(alpha > 0.0)) throw std::invalid_argument("power kernel: alpha must be positive");
  const std::size_t A = g.atoms();
  const double h = g.h();
  KernelFns f;
  f.deterministic = true;
  f.rho = [A, h](std::size_t, std::size_t, std::span<double> rho) {
    rho[0] = 0.0;
    for (std::size_t j = 1; j < A; ++j) rho[j] = h;
  };
  // density averaged over the slot and the cell: double primitive of (z - r)_+^alpha
  f.psi = [alpha, g, tg, A, h](std::size_t, std::size_t k, std::span<double> psi) {
    const double a = tg.t(k), b = tg.t(k + 1), dt = b - a;
    auto G = [&](double z) { return (pospow(z - a, alpha + 1) - pospow(z - b, alpha + 1)) / ((alpha + 1) * dt); };
    psi[0] = 0.0;
    double prev = G(g.z(0));
    for (std::size_t j = 1; j < A; ++j) {
      double cur = G(g.z(j));
      psi[j] = (cur - prev) / h;
      prev = cur;
    }
  };
  f.instant = [alpha, g](std::size_t, double r, std::span<double> out) {
    auto m = power_instant_measure(alpha, g, r);
    std::copy(m.weights().begin(), m.weights().end(), out.begin());
  };
  return make_kernel(g, tg, sc, 1, std::move(f));
}

PredictablePath evaluate(const MeasureProcess& phi, std::span<const double> f) {
  if (f.size() != phi.grid().atoms()) throw std::invalid_argument("evaluate: grid mismatch");
  const std::size_t P = phi.P(), N = phi.N(), d = phi.dim(), A = phi.grid().atoms();
  PredictablePath out(P, N, d);
  std::vector<double> buf(phi.width());
  if (phi.deterministic()) {
    for (std::size_t k = 0; k < N; ++k) {
      phi.fill(0, k, buf);
      for (std::size_t i = 0; i < d; ++i) {
        double v = pair(std::span<const double>(buf).subspan(i * A, A), f);
        for (std::size_t w = 0; w < P; ++w) out.at(w, k, i) = v;
      }
    }
    return out;
  }
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t k = 0; k < N; ++k) {
      phi.fill(w, k, buf);
      for (std::size_t i = 0; i < d; ++i) out.at(w, k, i) = pair(std::span<const double>(buf).subspan(i * A, A), f);
    }
  return out;
}

std::vector<PredictablePath> evaluate_family(const MeasureProcess& phi, const TestFamily& fam) {
  if (!(fam.grid() == phi.grid())) throw std::invalid_argument("evaluate_family: grid mismatch");
  const std::size_t P = phi.P(), N = phi.N(), d = phi.dim(), A = phi.grid().atoms(), K = fam.size();
  std::vector<PredictablePath> out(K, PredictablePath(P, N, d));
  std::vector<double> buf(phi.width());
  const bool det = phi.deterministic();
  for (std::size_t w = 0; w < (det ? 1 : P); ++w)
    for (std::size_t k = 0; k < N; ++k) {
      phi.fill(w, k, buf);
      for (std::size_t q = 0; q < K; ++q)
        for (std::size_t i = 0; i < d; ++i) {
          double v = pair(std::span<const double>(buf).subspan(i * A, A), fam.u(q));
          if (det)
            for (std::size_t s = 0; s < P; ++s) out[q].at(s, k, i) = v;
          else
            out[q].at(w, k, i) = v;
        }
    }
  return out;
}

PredictablePath variation_path(const MeasureProcess& phi) {
  const std::size_t P = phi.P(), N = phi.N(), d = phi.dim(), A = phi.grid().atoms();
  PredictablePath out(P, N, d);
  std::vector<double> buf(phi.width());
  const bool det = phi.deterministic();
  for (std::size_t w = 0; w < (det ? 1 : P); ++w)
    for (std::size_t k = 0; k < N; ++k) {
      phi.fill(w, k, buf);
      for (std::size_t i = 0; i < d; ++i) {
        double v = total_variation(std::span<const double>(buf).subspan(i * A, A));
        if (det)
          for (std::size_t s = 0; s < P; ++s) out.at(s, k, i) = v;
        else
          out.at(w, k, i) = v;
      }
    }
  return out;
}

std::vector<double> family_l2_sq(const MeasureProcess& phi, const TestFamily& fam, const MuWeights& mu) {
  if (!(fam.grid() == phi.grid())) throw std::invalid_argument("family_l2: grid mismatch");
  const std::size_t P = phi.P(), N = phi.N(), d = phi.dim(), A = phi.grid().atoms(), K = fam.size();
  if (mu.P != P || mu.N != N) throw std::invalid_argument("family_l2: mu size mismatch");
  std::vector<double> out(K, 0.0), buf(phi.width());
  std::vector<double> pk(K * d);
  auto pairings = [&](std::size_t w, std::size_t k) {
    phi.fill(w, k, buf);
    for (std::size_t q = 0; q < K; ++q)
      for (std::size_t i = 0; i < d; ++i) pk[q * d + i] = pair(std::span<const double>(buf).subspan(i * A, A), fam.u(q));
  };
  if (phi.deterministic()) {
    for (std::size_t k = 0; k < N; ++k) {
      double m = 0.0;
      for (std::size_t w = 0; w < P; ++w) m += mu(w, k);
      if (m == 0.0) continue;
      pairings(0, k);
      for (std::size_t q = 0; q < K; ++q) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += pk[q * d + i] * pk[q * d + i];
        out[q] += m * s;
      }
    }
    return out;
  }
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t k = 0; k < N; ++k) {
      double m = mu(w, k);
      if (m == 0.0) continue;
      pairings(w, k);
      for (std::size_t q = 0; q < K; ++q) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += pk[q * d + i] * pk[q * d + i];
        out[q] += m * s;
      }
    }
  return out;
}

double q_seminorm(const MeasureProcess& phi, const TestFamily& fam, const StoppingRule& tau, const PathEnsemble& V) {
  auto mu = mu_weights(tau, V, phi.scenarios());
  auto x = family_l2_sq(phi, fam, mu);
  double s = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) s += fam.gamma(q) * x[q];
  return std::sqrt(s);
}

PhiConstant phi_constant(const MeasureProcess& phi, const TestFamily& fam, const StoppingRule& tau,
                         const PathEnsemble& V) {
  auto mu = mu_weights(tau, V, phi.scenarios());
  auto x = family_l2_sq(phi, fam, mu);
  PhiConstant pc;
  for (std::size_t q = 0; q < x.size(); ++q)
    if (fam.sup_norm(q) > 0) pc.lower = std::max(pc.lower, std::sqrt(x[q]) / fam.sup_norm(q));
  auto var = variation_path(phi);
  pc.upper = std::sqrt(l2_mu_sq(var, mu));
  return pc;
}

MeasureProcess truncate(const MeasureProcess& phi, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("truncate: c must be positive");
  return MeasureProcess(phi.grid(), phi.time_grid(), phi.scenarios(), phi.dim(), Representation::derived,
                        std::make_shared<TruncSource>(phi, c));
}

double max_variation(const MeasureProcess& phi) {
  auto v = variation_path(phi);
  double m = 0.0;
  for (double x : v.data()) m = std::max(m, x);
  return m;
}

namespace {

std::vector<std::size_t> default_net_atoms(const CompactGrid& g) {
  std::vector<std::size_t> a;
  if (g.atoms() <= 16) {
    for (std::size_t j = 0; j < g.atoms(); ++j) a.push_back(j);
    return a;
  }
  for (std::size_t q = 0; q < 16; ++q) {
    std::size_t j = static_cast<std::size_t>(std::llround(static_cast<double>(q) * static_cast<double>(g.J) / 15.0));
    if (a.empty() || a.back() != j) a.push_back(j);
  }
  return a;
}

// scalar dense sequence on the sub-grid
std::vector<std::vector<double>> scalar_net(double c, std::size_t need, const CompactGrid& g,
                                            const std::vector<std::size_t>& atoms) {
  const std::size_t A = g.atoms(), G = atoms.size();
  std::vector<std::vector<double>> seq;
  std::set<std::vector<double>> seen;
  auto push = [&](std::vector<double> w) {
    if (seen.insert(w).second) seq.push_back(std::move(w));
  };
  push(std::vector<double>(A, 0.0));
  for (int L = 1; seq.size() < need && L < 30; ++L) {
    const std::size_t q = std::size_t{1} << L;
    std::vector<double> digits;
    for (std::size_t m = 1; m <= q; ++m) {
      digits.push_back(static_cast<double>(m) / static_cast<double>(q));
      digits.push_back(-static_cast<double>(m) / static_cast<double>(q));
    }
    const std::size_t D = digits.size();
    for (std::size_t s = 1; s <= G && seq.size() < need; ++s) {
      std::vector<std::size_t> comb(s);
      for (std::size_t p = 0; p < s; ++p) comb[p] = p;
      while (seq.size() < need) {
        std::vector<std::size_t> dig(s, 0);
        while (seq.size() < need) {
          std::vector<double> w(A, 0.0);
          double tv = 0.0;
          for (std::size_t p = 0; p < s; ++p) {
            w[atoms[comb[p]]] = c * digits[dig[p]];
            tv += std::abs(w[atoms[comb[p]]]);
          }
          if (tv > c)
            for (double& x : w) x *= c / tv;
          push(std::move(w));
          std::size_t p = s;
          bool carry = true;
          while (p > 0 && carry) {
            --p;
            if (++dig[p] < D) carry = false;
            else dig[p] = 0;
          }
          if (carry) break;
        }
        // next combination in lexicographic order
        std::size_t p = s;
        bool done = true;
        while (p > 0) {
          --p;
          if (comb[p] < G - s + p) {
            ++comb[p];
            for (std::size_t r = p + 1; r < s; ++r) comb[r] = comb[r - 1] + 1;
            done = false;
            break;
          }
        }
        if (done) break;
      }
    }
  }
  seq.resize(std::min(seq.size(), need));
  return seq;
}

}  // namespace

std::vector<SignedMeasureVec> weak_star_net(double c, std::size_t n, const CompactGrid& g, const NetOptions& opt) {
  if (n < 1) throw std::invalid_argument("net: n must be >= 1");
  if (!(c >= 0.0)) throw std::invalid_argument("net: c must be >= 0");
  const std::size_t d = opt.d;
  auto atoms = opt.atoms.empty() ? default_net_atoms(g) : opt.atoms;
  for (auto j : atoms)
    if (j >= g.atoms()) throw std::invalid_argument("net: sub-grid atom out of range");
  std::size_t m = 1;
  while (true) {
    std::size_t p = 1;
    for (std::size_t i = 0; i < d; ++i) p *= m;
    if (p >= n) break;
    ++m;
  }
  auto sc = scalar_net(c, m, g, atoms);
  const std::size_t A = g.atoms();
  std::vector<SignedMeasureVec> out;
  // d-tuples of scalar indices by shell max(index) = s, lexicographic inside a shell
  for (std::size_t s = 0; s < sc.size() && out.size() < n; ++s) {
    std::vector<std::size_t> t(d, 0);
    while (out.size() < n) {
      if (*std::max_element(t.begin(), t.end()) == s) {
        std::vector<double> w(d * A);
        for (std::size_t i = 0; i < d; ++i) std::copy(sc[t[i]].begin(), sc[t[i]].end(), w.begin() + i * A);
        out.emplace_back(g, d, std::move(w));
      }
      std::size_t p = d;
      bool done = true;
      while (p > 0) {
        --p;
        if (t[p] < s) {
          ++t[p];
          for (std::size_t r = p + 1; r < d; ++r) t[r] = 0;
          done = false;
          break;
        }
      }
      if (done) break;
    }
  }
  return out;
}

double net_fineness(const std::vector<SignedMeasureVec>& net, const std::vector<SignedMeasureVec>& probes,
                    const TestFamily& fam) {
  double worst = 0.0;
  for (const auto& p : probes) {
    double best = INFINITY;
    for (const auto& m : net) best = std::min(best, weak_star_delta(p, m, fam));
    worst = std::max(worst, best);
  }
  return worst;
}

Projection project_to_net(const MeasureProcess& phi, const std::vector<SignedMeasureVec>& net, const TestFamily& fam) {
  if (net.empty()) throw std::invalid_argument("project_to_net: empty net");
  const std::size_t P = phi.P(), N = phi.N(), d = phi.dim(), A = phi.grid().atoms(), K = fam.size();
  double c = 0.0;
  for (const auto& m : net) {
    if (!(m.grid() == phi.grid()) || m.dim() != d) throw std::invalid_argument("project_to_net: net grid mismatch");
    for (double v : total_variation(m)) c = std::max(c, v);
  }
  std::vector<double> np(net.size() * K * d);
  for (std::size_t j = 0; j < net.size(); ++j)
    for (std::size_t q = 0; q < K; ++q)
      for (std::size_t i = 0; i < d; ++i) np[(j * K + q) * d + i] = pair(net[j].component(i), fam.u(q));
  Projection pr;
  pr.net = net;
  pr.index.assign(P * N, 0);
  pr.delta.assign(P * N, 0.0);
  std::vector<double> buf(phi.width()), fp(K * d);
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t k = 0; k < N; ++k) {
      phi.fill(w, k, buf);
      for (std::size_t i = 0; i < d; ++i) {
        auto comp = std::span<const double>(buf).subspan(i * A, A);
        if (total_variation(comp) > c * (1 + 1e-12) + 1e-300 && c > 0)
          throw std::invalid_argument("project_to_net: value outside the net ball, truncate first");
        for (std::size_t q = 0; q < K; ++q) fp[q * d + i] = pair(comp, fam.u(q));
      }
      double best = INFINITY;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < net.size(); ++j) {
        double dl = 0.0;
        for (std::size_t q = 0; q < K; ++q) {
          double sq = 0.0;
          for (std::size_t i = 0; i < d; ++i) {
            double x = fp[q * d + i] - np[(j * K + q) * d + i];
            sq += x * x;
          }
          dl += fam.delta_weight(q) * std::sqrt(sq);
        }
        if (dl < best) {  // strict: first index wins ties
          best = dl;
          arg = j;
        }
      }
      pr.index[w * N + k] = arg;
      pr.delta[w * N + k] = best;
    }
  pr.psi = MeasureProcess(phi.grid(), phi.time_grid(), phi.scenarios(), d, Representation::piecewise,
                          std::make_shared<PiecewiseSource>(net, pr.index, N));
  return pr;
}

MeasureProcess rectangle_refine(const Projection& proj) {
  const auto& psi = proj.psi;
  const auto& sc = psi.scenarios();
  if (!sc.is_tree())
    throw std::logic_error("rectangle_refine: needs explicit filtration atoms, use tree mode");
  const std::size_t P = psi.P(), N = psi.N();
  std::vector<bool> is_zero(proj.net.size());
  for (std::size_t j = 0; j < proj.net.size(); ++j) {
    auto f = proj.net[j].flat();
    is_zero[j] = std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; });
  }
  std::vector<ElementaryTerm> terms;
  std::map<std::pair<std::size_t, std::vector<std::uint8_t>>, std::size_t> open;
  for (std::size_t k = 0; k < N; ++k) {
    std::map<std::size_t, std::vector<std::uint8_t>> groups;
    for (std::size_t w = 0; w < P; ++w) {
      std::size_t j = proj.index[w * N + k];
      if (is_zero[j]) continue;
      auto& m = groups[j];
      if (m.empty()) m.assign(P, 0);
      m[w] = 1;
    }
    std::map<std::pair<std::size_t, std::vector<std::uint8_t>>, std::size_t> next;
    for (auto& [j, mask] : groups) {
      auto key = std::make_pair(j, mask);
      auto it = open.find(key);
      if (it != open.end() && terms[it->second].b == k) {
        terms[it->second].b = k + 1;
        next[key] = it->second;
      } else {
        terms.push_back(ElementaryTerm{proj.net[j], k, k + 1, mask});
        next[key] = terms.size() - 1;
      }
    }
    open = std::move(next);
  }
  for (auto& t : terms)
    if (std::all_of(t.member.begin(), t.member.end(), [](std::uint8_t b) { return b != 0; })) t.member.clear();
  return make_elementary(psi.grid(), psi.time_grid(), sc, psi.dim(), std::move(terms));
}

ApproxResult approximate_elementary(const MeasureProcess& phi, const StoppingRule& tau, const PathEnsemble& V,
                                    const TestFamily& fam, const ApproxSchedule& sched) {
  const auto& sc = phi.scenarios();
  if (!sc.is_tree()) throw std::logic_error("approximate_elementary: tree mode required");
  if (!in_phi_check(phi, V).member) throw std::invalid_argument("approximate_elementary: phi is not in Phi(tau, V)");
  ApproxResult res;
  res.v_l2 = v_tau_l2(V, tau, sc);
  res.c_phi = phi_constant(phi, fam, tau, V).lower;
  auto uniform = [&](const MeasureProcess& p) {
    auto mu = mu_weights(tau, V, sc);
    auto x = family_l2_sq(p, fam, mu);
    double m = 0.0;
    for (std::size_t q = 0; q < x.size(); ++q)
      if (fam.sup_norm(q) > 0) m = std::max(m, std::sqrt(x[q]) / fam.sup_norm(q));
    return m;
  };
  const double vmax = max_variation(phi);
  if (phi.representation() == Representation::elementary || vmax == 0.0) {
    MeasureProcess e = phi.representation() == Representation::elementary
                           ? phi
                           : zero_process(phi.grid(), phi.time_grid(), sc, phi.dim());
    res.b = sched.b > 1 ? sched.b : vmax + 1.0;
    ApproxReport r;
    r.n = 1;
    r.q_error = q_seminorm(difference(e, phi), fam, tau, V);
    r.uniform_constant = uniform(e);
    r.bound = 2 * res.b * res.v_l2 + 2 * res.c_phi;
    r.rectangles = e.elementary_terms()->size();
    res.sequence.push_back(e);
    res.rows.push_back(r);
    res.reached = r.q_error <= sched.tolerance;
    return res;
  }
  double c = sched.b > 1 ? sched.b - 1 : vmax;
  res.b = c + 1;
  MeasureProcess phic = c >= vmax ? phi : truncate(phi, c);
  NetOptions no = sched.net;
  no.d = phi.dim();
  double sup_u = 0.0;
  for (std::size_t n = 0; n < sched.net_sizes.size(); ++n) {
    auto net = weak_star_net(c, sched.net_sizes[n], phi.grid(), no);
    auto pr = project_to_net(phic, net, fam);
    auto e = rectangle_refine(pr);
    ApproxReport r;
    r.n = n + 1;
    r.net_size = net.size();
    r.q_error = q_seminorm(difference(e, phi), fam, tau, V);
    sup_u = std::max(sup_u, uniform(e));
    r.uniform_constant = sup_u;
    r.bound = 2 * res.b * res.v_l2 + 2 * res.c_phi;
    r.rectangles = e.elementary_terms()->size();
    res.sequence.push_back(std::move(e));
    res.rows.push_back(r);
  }
  res.reached = res.rows.back().q_error <= sched.tolerance;
  return res;
}

PhiCheck in_phi_check(const MeasureProcess& phi, const PathEnsemble& V) {
  const std::size_t P = phi.P(), N = phi.N(), d = phi.dim(), A = phi.grid().atoms();
  if (V.scenarios() != P || V.length() != N + 1) throw std::invalid_argument("in_phi_check: V size mismatch");
  PhiCheck pc;
  pc.d_path = PathEnsemble(P, N + 1);
  std::vector<double> buf(phi.width());
  const auto& tg = phi.time_grid();
  // slot average of |‖phi‖_var|^2
  auto slot_sq = [&](std::size_t w, std::size_t k) {
    if (!phi.has_instant()) {
      phi.fill(w, k, buf);
      return euclid_var_sq(buf, d, A);
    }
    const double a = tg.t(k), dt = tg.t(k + 1) - a;
    double s = 0.0;
    for (std::size_t g = 0; g < kGLx.size(); ++g) {
      phi.instant(w, k, a + kGLx[g] * dt, buf);
      s += kGLw[g] * euclid_var_sq(buf, d, A);
    }
    return s;
  };
  std::vector<double> det;
  if (phi.deterministic()) {
    det.resize(N);
    for (std::size_t k = 0; k < N; ++k) det[k] = slot_sq(0, k);
  }
  for (std::size_t w = 0; w < P; ++w) {
    double acc = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      double dv = V(w, k + 1) - V(w, k);
      double v = det.empty() ? slot_sq(w, k) : det[k];
      acc += v * dv;
      pc.d_path.at(w, k + 1) = acc;
      if (!std::isfinite(acc) && pc.member) {
        pc.member = false;
        pc.bad_scenario = w;
        pc.bad_index = k + 1;
      }
      if (std::isfinite(acc)) pc.sup = std::max(pc.sup, acc);
    }
  }
  return pc;
}

std::string to_csv(const std::vector<ApproxReport>& rows) {
  std::ostringstream os;
  os << "n,net_size,q_error,uniform_constant,bound,rectangles\n";
  for (const auto& r : rows)
    os << r.n << ',' << r.net_size << ',' << fmt_num(r.q_error) << ',' << fmt_num(r.uniform_constant) << ','
       << fmt_num(r.bound) << ',' << r.rectangles << '\n';
  return os.str();
}

}  // namespace mvf
