#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvf {

// Uniform atoms z_j = j*T_K/J, j = 0..J. Atom j >= 1 stands for the cell
// (z_{j-1}, z_j]; atom 0 stands for the point {0}.
struct CompactGrid {
  double T_K = 1.0;
  std::size_t J = 1;

  CompactGrid() = default;
  CompactGrid(double t_k, std::size_t j);

  std::size_t atoms() const { return J + 1; }
  double z(std::size_t j) const;
  double h() const { return T_K / static_cast<double>(J); }
  // index of the atom sitting at x; throws if x is not a grid point
  std::size_t atom_at(double x) const;

  bool operator==(const CompactGrid&) const = default;
};

using GridFunction = std::vector<double>;

class SignedMeasure {
 public:
  SignedMeasure() = default;
  explicit SignedMeasure(const CompactGrid& g);
  SignedMeasure(const CompactGrid& g, std::vector<double> w);

  // w_0 = 0, w_j = F(z_j) - F(z_{j-1}); exact cell masses of a Lebesgue density
  template <class F>
  static SignedMeasure from_primitive(const CompactGrid& g, F&& prim) {
    std::vector<double> w(g.atoms(), 0.0);
    double prev = prim(g.z(0));
    for (std::size_t j = 1; j < g.atoms(); ++j) {
      double cur = prim(g.z(j));
      w[j] = cur - prev;
      prev = cur;
    }
    return SignedMeasure(g, std::move(w));
  }
  // midpoint rule per cell, used when no primitive is known
  template <class F>
  static SignedMeasure from_density(const CompactGrid& g, F&& dens) {
    std::vector<double> w(g.atoms(), 0.0);
    for (std::size_t j = 1; j < g.atoms(); ++j)
      w[j] = dens(0.5 * (g.z(j - 1) + g.z(j))) * g.h();
    return SignedMeasure(g, std::move(w));
  }

  const CompactGrid& grid() const { return grid_; }
  std::span<const double> weights() const { return w_; }
  double operator[](std::size_t j) const { return w_[j]; }
  std::size_t size() const { return w_.size(); }

 private:
  CompactGrid grid_;
  std::vector<double> w_;
};

// d components on one grid, stored row-major (component, atom)
class SignedMeasureVec {
 public:
  SignedMeasureVec() = default;
  SignedMeasureVec(const CompactGrid& g, std::size_t d);
  SignedMeasureVec(const CompactGrid& g, std::size_t d, std::vector<double> w);
  explicit SignedMeasureVec(const SignedMeasure& m);

  const CompactGrid& grid() const { return grid_; }
  std::size_t dim() const { return d_; }
  std::span<const double> component(std::size_t i) const;
  std::span<double> component_mut(std::size_t i);
  SignedMeasure measure(std::size_t i) const;
  std::span<const double> flat() const { return w_; }
  std::span<double> flat_mut() { return w_; }

  bool operator==(const SignedMeasureVec& o) const {
    return grid_ == o.grid_ && d_ == o.d_ && w_ == o.w_;
  }

 private:
  CompactGrid grid_;
  std::size_t d_ = 0;
  std::vector<double> w_;
};

class TestFamily {
 public:
  TestFamily() = default;
  TestFamily(const CompactGrid& g, std::vector<GridFunction> u, std::vector<double> gamma);

  const CompactGrid& grid() const { return grid_; }
  std::size_t size() const { return u_.size(); }
  const GridFunction& u(std::size_t k) const { return u_[k]; }
  double gamma(std::size_t k) const { return gamma_[k]; }
  // 2^{-(k+1)}: the fixed weights of the weak* metric, k is 0-based
  double delta_weight(std::size_t k) const;
  double sup_norm(std::size_t k) const { return sup_[k]; }

 private:
  CompactGrid grid_;
  std::vector<GridFunction> u_;
  std::vector<double> gamma_;
  std::vector<double> sup_;
};

double total_variation(std::span<const double> w);
double total_variation(const SignedMeasure& m);
std::vector<double> total_variation(const SignedMeasureVec& m);

double pair(std::span<const double> w, std::span<const double> f);
double pair(const SignedMeasure& m, std::span<const double> f);
std::vector<double> pair(const SignedMeasureVec& m, std::span<const double> f);

std::pair<SignedMeasure, SignedMeasure> jordan(const SignedMeasure& m);

double weak_star_delta(const SignedMeasure& a, const SignedMeasure& b, const TestFamily& fam);
double weak_star_delta(const SignedMeasureVec& a, const SignedMeasureVec& b, const TestFamily& fam);

// hats first (one per atom, in atom order), then sign vectors s_m(j) = -1 if bit j
// of m is set else +1, m = 0, 1, 2, ... until size K_max
TestFamily build_test_family(const CompactGrid& g, std::size_t K_max);

// indicator of the atoms z_j in [a, b]; a and b must be grid points
GridFunction interval_indicator(const CompactGrid& g, double a, double b);

// CSV rows "component,atom,z,weight" and a JSON descriptor {T_K, J, d}
std::string to_csv(const SignedMeasureVec& m);
std::string descriptor_json(const SignedMeasureVec& m);

}  // namespace mvf
