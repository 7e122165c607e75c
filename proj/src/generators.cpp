#include "mvf/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvf/util.hpp"

namespace mvf {

MeasureProcess random_elementary(const CompactGrid& g, const DriverPath& S, std::size_t n_terms, std::mt19937_64& rng) {
  const std::size_t N = S.N(), d = S.d(), A = g.atoms(), P = S.P();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::vector<ElementaryTerm> terms;
  for (std::size_t n = 0; n < n_terms; ++n) {
    ElementaryTerm t;
    t.a = std::uniform_int_distribution<std::size_t>(0, N - 1)(rng);
    t.b = std::uniform_int_distribution<std::size_t>(t.a + 1, N)(rng);
    std::vector<double> w(d * A, 0.0);
    const std::size_t na = std::min<std::size_t>(A, 1 + rng() % 5);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t q = 0; q < na; ++q) w[i * A + rng() % A] += u(rng);
    t.m = SignedMeasureVec(g, d, std::move(w));
    if (t.a > 0 && (rng() & 1)) {
      const double thr = S.spec.s0 + 0.5 * nrm(rng) * std::sqrt(S.grid.t(t.a));
      t.member.resize(P);
      for (std::size_t s = 0; s < P; ++s) t.member[s] = S.s(s, t.a) >= thr ? 1 : 0;
    }
    terms.push_back(std::move(t));
  }
  return make_elementary(g, S.grid, S.scenarios, d, std::move(terms));
}

MeasureProcess random_dirac_kernel(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, double c,
                                   std::uint64_t seed) {
  const std::size_t A = g.atoms();
  const bool tree = sc.is_tree();
  // (atom, amplitude) drawn from a hash of (seed, slot, information cell)
  auto pick = [seed, A, c, tree, sc](std::size_t w, std::size_t k) {
    const std::size_t cell = tree ? sc.atom(w, k) : w;
    const std::uint64_t h = mix64(mix64(seed ^ (0x9e37ULL + k)) ^ mix64(cell + 0x51ULL));
    const std::size_t atom = static_cast<std::size_t>(h % A);
    static constexpr double amp[4] = {0.5, -0.5, 1.0, -1.0};
    return std::pair<std::size_t, double>(atom, c * amp[(h >> 32) % 4]);
  };
  KernelFns f;
  f.psi = [pick](std::size_t w, std::size_t k, std::span<double> psi) {
    std::fill(psi.begin(), psi.end(), pick(w, k).second);
  };
  f.rho = [pick](std::size_t w, std::size_t k, std::span<double> rho) {
    std::fill(rho.begin(), rho.end(), 0.0);
    rho[pick(w, k).first] = 1.0;
  };
  return make_kernel(g, tg, sc, 1, std::move(f));
}

}  // namespace mvf
