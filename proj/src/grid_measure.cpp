#include "mvf/grid_measure.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mvf/util.hpp"

namespace mvf {

CompactGrid::CompactGrid(double t_k, std::size_t j) : T_K(t_k), J(j) {
  if (!(t_k > 0.0) || !std::isfinite(t_k)) throw std::invalid_argument("grid: T_K must be positive");
  if (j < 1) throw std::invalid_argument("grid: need J >= 1");
}

double CompactGrid::z(std::size_t j) const {
  if (j >= J) return T_K;  // keep z_J == T_K bit-exact
  return T_K * static_cast<double>(j) / static_cast<double>(J);
}

std::size_t CompactGrid::atom_at(double x) const {
  double pos = x / T_K * static_cast<double>(J);
  double r = std::round(pos);
  if (r < 0 || r > static_cast<double>(J) || std::abs(pos - r) > 1e-9)
    throw std::invalid_argument("grid: point " + fmt_num(x) + " is not an atom");
  return static_cast<std::size_t>(r);
}

SignedMeasure::SignedMeasure(const CompactGrid& g) : grid_(g), w_(g.atoms(), 0.0) {}

SignedMeasure::SignedMeasure(const CompactGrid& g, std::vector<double> w) : grid_(g), w_(std::move(w)) {
  if (w_.size() != g.atoms()) throw std::invalid_argument("measure: weight count != atom count");
  for (double x : w_)
    if (!std::isfinite(x)) throw std::invalid_argument("measure: non-finite weight");
}

SignedMeasureVec::SignedMeasureVec(const CompactGrid& g, std::size_t d)
    : grid_(g), d_(d), w_(d * g.atoms(), 0.0) {
  if (d < 1) throw std::invalid_argument("measure vec: d must be >= 1");
}

SignedMeasureVec::SignedMeasureVec(const CompactGrid& g, std::size_t d, std::vector<double> w)
    : grid_(g), d_(d), w_(std::move(w)) {
  if (d < 1) throw std::invalid_argument("measure vec: d must be >= 1");
  if (w_.size() != d * g.atoms()) throw std::invalid_argument("measure vec: bad weight count");
  for (double x : w_)
    if (!std::isfinite(x)) throw std::invalid_argument("measure vec: non-finite weight");
}

SignedMeasureVec::SignedMeasureVec(const SignedMeasure& m)
    : grid_(m.grid()), d_(1), w_(m.weights().begin(), m.weights().end()) {}

std::span<const double> SignedMeasureVec::component(std::size_t i) const {
  return std::span<const double>(w_).subspan(i * grid_.atoms(), grid_.atoms());
}

std::span<double> SignedMeasureVec::component_mut(std::size_t i) {
  return std::span<double>(w_).subspan(i * grid_.atoms(), grid_.atoms());
}

SignedMeasure SignedMeasureVec::measure(std::size_t i) const {
  auto c = component(i);
  return SignedMeasure(grid_, std::vector<double>(c.begin(), c.end()));
}

TestFamily::TestFamily(const CompactGrid& g, std::vector<GridFunction> u, std::vector<double> gamma)
    : grid_(g), u_(std::move(u)), gamma_(std::move(gamma)) {
  if (u_.empty() || u_.size() != gamma_.size()) throw std::invalid_argument("family: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < u_.size(); ++k) {
    if (u_[k].size() != g.atoms()) throw std::invalid_argument("family: function length != atoms");
    double m = 0.0;
    for (double x : u_[k]) m = std::max(m, std::abs(x));
    if (m > 1.0) throw std::invalid_argument("family: |u_k| exceeds 1");
    sup_.push_back(m);
    if (!(gamma_[k] > 0.0)) throw std::invalid_argument("family: weights must be positive");
    s += gamma_[k];
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("family: weights must sum to 1");
}

double TestFamily::delta_weight(std::size_t k) const { return std::ldexp(1.0, -static_cast<int>(k) - 1); }

double total_variation(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += std::abs(x);
  return s;
}

double total_variation(const SignedMeasure& m) { return total_variation(m.weights()); }

std::vector<double> total_variation(const SignedMeasureVec& m) {
  std::vector<double> out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) out[i] = total_variation(m.component(i));
  return out;
}

double pair(std::span<const double> w, std::span<const double> f) {
  if (w.size() != f.size()) throw std::invalid_argument("pair: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += f[j] * w[j];
  return s;
}

double pair(const SignedMeasure& m, std::span<const double> f) { return pair(m.weights(), f); }

std::vector<double> pair(const SignedMeasureVec& m, std::span<const double> f) {
  std::vector<double> out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) out[i] = pair(m.component(i), f);
  return out;
}

std::pair<SignedMeasure, SignedMeasure> jordan(const SignedMeasure& m) {
  std::vector<double> p(m.size(), 0.0), n(m.size(), 0.0);
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m[j] > 0) p[j] = m[j];
    else if (m[j] < 0) n[j] = -m[j];
  }
  return {SignedMeasure(m.grid(), std::move(p)), SignedMeasure(m.grid(), std::move(n))};
}

double weak_star_delta(const SignedMeasure& a, const SignedMeasure& b, const TestFamily& fam) {
  return weak_star_delta(SignedMeasureVec(a), SignedMeasureVec(b), fam);
}

double weak_star_delta(const SignedMeasureVec& a, const SignedMeasureVec& b, const TestFamily& fam) {
  if (!(a.grid() == b.grid()) || a.dim() != b.dim() || !(a.grid() == fam.grid()))
    throw std::invalid_argument("delta: grid mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < fam.size(); ++k) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
      double x = pair(a.component(i), fam.u(k)) - pair(b.component(i), fam.u(k));
      sq += x * x;
    }
    s += fam.delta_weight(k) * std::sqrt(sq);
  }
  return s;
}

TestFamily build_test_family(const CompactGrid& g, std::size_t K_max) {
  if (K_max < 1) throw std::invalid_argument("family: K_max must be >= 1");
  if (K_max > 1000) throw std::invalid_argument("family: K_max > 1000 underflows the weights");
  const std::size_t A = g.atoms();
  std::vector<GridFunction> u;
  for (std::size_t j = 0; j < A && u.size() < K_max; ++j) {
    GridFunction f(A, 0.0);
    f[j] = 1.0;
    u.push_back(std::move(f));
  }
  // all 2^A sign vectors exist only for small grids; stop once exhausted
  const bool small = A < 20;
  const std::size_t total_signs = small ? (std::size_t{1} << A) : K_max;
  for (std::size_t m = 0; u.size() < K_max && m < total_signs; ++m) {
    GridFunction f(A, 1.0);
    for (std::size_t j = 0; j < A && j < 64; ++j)
      if ((m >> j) & 1U) f[j] = -1.0;
    u.push_back(std::move(f));
  }
  // 2^{-(k+1)}, the last weight doubled so the total is exactly 1
  std::vector<double> gamma(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) gamma[k] = std::ldexp(1.0, -static_cast<int>(k) - 1);
  gamma.back() *= 2.0;
  return TestFamily(g, std::move(u), std::move(gamma));
}

GridFunction interval_indicator(const CompactGrid& g, double a, double b) {
  GridFunction f(g.atoms(), 0.0);
  if (a > b) return f;
  std::size_t ja = g.atom_at(a), jb = g.atom_at(b);
  for (std::size_t j = ja; j <= jb; ++j) f[j] = 1.0;
  return f;
}

std::string to_csv(const SignedMeasureVec& m) {
  std::ostringstream os;
  os << "component,atom,z,weight\n";
  for (std::size_t i = 0; i < m.dim(); ++i) {
    auto c = m.component(i);
    for (std::size_t j = 0; j < c.size(); ++j)
      os << i << ',' << j << ',' << fmt_num(m.grid().z(j)) << ',' << fmt_num(c[j]) << '\n';
  }
  return os.str();
}

std::string descriptor_json(const SignedMeasureVec& m) {
  return "{\"T_K\": " + fmt_num(m.grid().T_K) + ", \"J\": " + std::to_string(m.grid().J) +
         ", \"d\": " + std::to_string(m.dim()) + "}";
}

}  // namespace mvf
