#include "mvf/volterra.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "mvf/util.hpp"

namespace mvf {

namespace {

double pospow(double x, double a) { return x > 0.0 ? std::pow(x, a) : 0.0; }

VolterraKernel toeplitz_base(std::string name, const TimeGrid& tg) {
  VolterraKernel K;
  K.name = std::move(name);
  K.tg = tg;
  K.toeplitz = true;
  K.conv.assign(tg.N, 0.0);
  K.diag.assign(tg.N, 0.0);
  return K;
}

std::mutex g_plan_mutex;

// per-thread FFTW workspace for one convolution length
struct FftWork {
  std::size_t L = 0;
  double* re = nullptr;
  fftw_complex* sp = nullptr;
  fftw_complex* kc = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;
  std::vector<double> cached_c;

  ~FftWork() { release(); }
  void release() {
    std::lock_guard<std::mutex> lk(g_plan_mutex);
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (re) fftw_free(re);
    if (sp) fftw_free(sp);
    if (kc) fftw_free(kc);
    fwd = bwd = nullptr;
    re = nullptr;
    sp = kc = nullptr;
  }
  void prepare(std::size_t n) {
    std::size_t need = 1;
    while (need < 2 * n) need <<= 1;
    if (need == L) return;
    release();
    L = need;
    cached_c.clear();
    std::lock_guard<std::mutex> lk(g_plan_mutex);
    re = fftw_alloc_real(L);
    sp = fftw_alloc_complex(L / 2 + 1);
    kc = fftw_alloc_complex(L / 2 + 1);
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(L), re, sp, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(L), sp, re, FFTW_ESTIMATE);
  }
};

thread_local FftWork t_fft;

void toeplitz_fft(const std::vector<double>& c, const std::vector<double>& x, std::vector<double>& out) {
  const std::size_t n = x.size();
  FftWork& f = t_fft;
  f.prepare(n);
  const std::size_t L = f.L, H = L / 2 + 1;
  if (f.cached_c != c) {
    std::fill(f.re, f.re + L, 0.0);
    std::copy(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(std::min(c.size(), n)), f.re);
    fftw_execute(f.fwd);
    std::memcpy(f.kc, f.sp, sizeof(fftw_complex) * H);
    f.cached_c = c;
  }
  std::fill(f.re, f.re + L, 0.0);
  std::copy(x.begin(), x.end(), f.re);
  fftw_execute(f.fwd);
  for (std::size_t i = 0; i < H; ++i) {
    const double a = f.sp[i][0], b = f.sp[i][1], p = f.kc[i][0], q = f.kc[i][1];
    f.sp[i][0] = a * p - b * q;
    f.sp[i][1] = a * q + b * p;
  }
  fftw_execute(f.bwd);
  out.assign(n + 1, 0.0);
  const double inv = 1.0 / static_cast<double>(L);
  for (std::size_t l = 1; l <= n; ++l) out[l] = f.re[l - 1] * inv;
}

// summed increments times the predictable multiplier
void drive_increments(const VolterraKernel& K, const DriverPath& S, std::size_t w, std::vector<double>& x) {
  const std::size_t N = S.N();
  x.assign(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < S.d(); ++i) s += S.ds(w, k, i);
    x[k] = K.mult(w, k) * s;
  }
}

void check_kernel(const VolterraKernel& K, const DriverPath& S) {
  if (!(K.tg == S.grid)) throw std::invalid_argument("volterra: kernel and driver grids differ");
  if (K.adapted() && K.scale_P != S.P()) throw std::invalid_argument("volterra: adapted kernel scenario count mismatch");
}

class InducedSource final : public MeasureSource {
 public:
  InducedSource(VolterraKernel k, std::size_t d) : K(std::move(k)), d_(d), A_(K.N() + 1) {}
  void fill(std::size_t w, std::size_t k, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    const double m = K.mult(w, k);
    double prev = K.diag[k];
    for (std::size_t j = k + 1; j < A_; ++j) {
      const double cur = K.psi(j, k);
      const double v = (cur - prev) * m;
      prev = cur;
      for (std::size_t i = 0; i < d_; ++i) out[i * A_ + j] = v;
    }
  }
  bool deterministic() const override { return !K.adapted(); }
  bool has_instant() const override { return static_cast<bool>(K.value); }
  void instant(std::size_t w, std::size_t k, double r, std::span<double> out) const override {
    if (!K.value) {
      MeasureSource::instant(w, k, r, out);
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    const double m = K.mult(w, k), base = K.value(r, r), h = K.tg.dt();
    double prev = 0.0;
    for (std::size_t j = 1; j < A_; ++j) {
      const double z = h * static_cast<double>(j);
      if (z < r) continue;
      const double cur = K.value(z, r) - base;
      for (std::size_t i = 0; i < d_; ++i) out[i * A_ + j] = (cur - prev) * m;
      prev = cur;
    }
  }
  VolterraKernel K;

 private:
  std::size_t d_, A_;
};

}  // namespace

VolterraKernel power_alpha_kernel(double alpha, const TimeGrid& tg) {
  if (!(alpha > 0.0)) throw std::invalid_argument("power_alpha: alpha must be positive");
  auto K = toeplitz_base("power_alpha", tg);
  const double dt = tg.dt(), sc = std::pow(dt, alpha) / (alpha + 1);
  for (std::size_t m = 0; m < tg.N; ++m)
    K.conv[m] = sc * (std::pow(m + 1.0, alpha + 1) - std::pow(static_cast<double>(m), alpha + 1));
  K.value = [alpha](double t, double s) { return pospow(t - s, alpha); };
  K.density = [alpha](double r, double s) { return alpha * std::pow(r - s, alpha - 1); };
  return K;
}

VolterraKernel affine_kernel(double a, double b, const TimeGrid& tg) {
  auto K = toeplitz_base("affine", tg);
  const double dt = tg.dt();
  for (std::size_t m = 0; m < tg.N; ++m) K.conv[m] = a + b * (static_cast<double>(m) + 0.5) * dt;
  std::fill(K.diag.begin(), K.diag.end(), a);
  K.value = [a, b](double t, double s) { return t >= s ? a + b * (t - s) : 0.0; };
  K.density = [b](double, double) { return b; };
  return K;
}

VolterraKernel quadratic_kernel(const TimeGrid& tg) {
  auto K = toeplitz_base("quadratic", tg);
  const double dt = tg.dt();
  for (std::size_t m = 0; m < tg.N; ++m) {
    const double x = static_cast<double>(m);
    K.conv[m] = dt * dt * ((x + 1) * (x + 1) * (x + 1) - x * x * x) / 3.0;
  }
  K.value = [](double t, double s) { return t >= s ? (t - s) * (t - s) : 0.0; };
  K.density = [](double r, double s) { return 2.0 * (r - s); };
  return K;
}

VolterraKernel exp_decay_kernel(double lambda, const TimeGrid& tg) {
  if (!(lambda > 0.0)) throw std::invalid_argument("exp_decay: lambda must be positive");
  auto K = toeplitz_base("exp_decay", tg);
  const double dt = tg.dt(), avg = -std::expm1(-lambda * dt) / (lambda * dt);
  for (std::size_t m = 0; m < tg.N; ++m) K.conv[m] = std::exp(-lambda * dt * static_cast<double>(m)) * avg;
  std::fill(K.diag.begin(), K.diag.end(), 1.0);
  K.value = [lambda](double t, double s) { return t >= s ? std::exp(-lambda * (t - s)) : 0.0; };
  K.density = [lambda](double r, double s) { return -lambda * std::exp(-lambda * (r - s)); };
  return K;
}

VolterraKernel constant_kernel(double c, const TimeGrid& tg) {
  auto K = toeplitz_base("constant", tg);
  std::fill(K.conv.begin(), K.conv.end(), c);
  std::fill(K.diag.begin(), K.diag.end(), c);
  K.value = [c](double t, double s) { return t >= s ? c : 0.0; };
  K.density = [](double, double) { return 0.0; };
  return K;
}

VolterraKernel tabulated_kernel(const TimeGrid& tg, std::vector<double> table, std::vector<double> diag) {
  const std::size_t N = tg.N;
  if (table.size() != (N + 1) * N || diag.size() != N) throw std::invalid_argument("tabulated kernel: wrong size");
  for (std::size_t l = 0; l <= N; ++l)
    for (std::size_t k = 0; k < N; ++k) {
      const double v = table[l * N + k];
      if (std::isnan(v)) throw std::invalid_argument("tabulated kernel: NaN entry");
      if (l <= k && v != 0.0) throw std::invalid_argument("tabulated kernel: nonzero entry on or above the diagonal");
    }
  VolterraKernel K;
  K.name = "tabulated";
  K.tg = tg;
  K.table = std::move(table);
  K.diag = std::move(diag);
  return K;
}

VolterraKernel random_fv_kernel(const TimeGrid& tg, std::uint64_t seed) {
  const std::size_t N = tg.N;
  std::mt19937_64 rng(mix64(seed ^ 0x7f4a7c15ULL));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> table((N + 1) * N, 0.0), diag(N);
  const double step = 1.0 / std::sqrt(static_cast<double>(N));
  for (std::size_t k = 0; k < N; ++k) {
    diag[k] = u(rng);
    double cur = diag[k];
    for (std::size_t l = k + 1; l <= N; ++l) {
      cur += step * u(rng);
      table[l * N + k] = cur;
    }
  }
  auto K = tabulated_kernel(tg, std::move(table), std::move(diag));
  K.name = "random_fv";
  return K;
}

VolterraKernel load_tabulated_kernel(const TimeGrid& tg, const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::invalid_argument("tabulated kernel: cannot open " + csv_path);
  const std::size_t N = tg.N;
  std::vector<double> table, diag;
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    bool is_diag = false;
    while (std::getline(ss, cell, ',')) {
      if (vals.empty() && !is_diag && cell == "diag") {
        is_diag = true;
        continue;
      }
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw std::invalid_argument("tabulated kernel: bad number '" + cell + "'");
      vals.push_back(v);
    }
    if (vals.size() != N) throw std::invalid_argument("tabulated kernel: each row needs N values");
    if (is_diag) diag = vals;
    else {
      table.insert(table.end(), vals.begin(), vals.end());
      ++rows;
    }
  }
  if (rows != N + 1) throw std::invalid_argument("tabulated kernel: expected N+1 rows");
  if (diag.empty()) diag.assign(N, 0.0);
  return tabulated_kernel(tg, std::move(table), std::move(diag));
}

std::string kernel_to_csv(const VolterraKernel& K) {
  std::ostringstream os;
  const std::size_t N = K.N();
  for (std::size_t l = 0; l <= N; ++l)
    for (std::size_t k = 0; k < N; ++k) os << fmt_num(K.psi(l, k)) << (k + 1 == N ? '\n' : ',');
  os << "diag";
  for (double v : K.diag) os << ',' << fmt_num(v);
  os << '\n';
  return os.str();
}

VolterraKernel make_volterra_kernel(const std::string& name, const std::map<std::string, double>& params,
                                    const TimeGrid& tg, const std::string& path) {
  auto get = [&](const char* key, double def) {
    auto it = params.find(key);
    return it == params.end() ? def : it->second;
  };
  if (name == "power_alpha") return power_alpha_kernel(get("alpha", 1.0), tg);
  if (name == "affine") return affine_kernel(get("a", 1.0), get("b", 1.0), tg);
  if (name == "quadratic") return quadratic_kernel(tg);
  if (name == "exp_decay") return exp_decay_kernel(get("lambda", 1.0), tg);
  if (name == "constant") return constant_kernel(get("c", 1.0), tg);
  if (name == "random_fv") return random_fv_kernel(tg, static_cast<std::uint64_t>(get("seed", 1.0)));
  if (name == "tabulated") return load_tabulated_kernel(tg, path);
  throw UnknownKernel("unknown kernel '" + name + "'");
}

VolterraKernel adapt_kernel(const VolterraKernel& K, const DriverPath& S) {
  if (!(K.tg == S.grid)) throw std::invalid_argument("adapt_kernel: grid mismatch");
  VolterraKernel out = K;
  out.name = K.name + "_adapted";
  out.scale_P = S.P();
  out.scale.assign(S.P() * S.N(), 1.0);
  for (std::size_t w = 0; w < S.P(); ++w)
    for (std::size_t k = 0; k < S.N(); ++k)
      out.scale[w * S.N() + k] = K.mult(w, k) * (1.0 + 0.5 * std::tanh(S.s(w, k) - S.spec.s0));
  return out;
}

void toeplitz_apply(const std::vector<double>& c, const std::vector<double>& x, std::vector<double>& out) {
  const std::size_t n = x.size();
  if (c.size() < n) throw std::invalid_argument("toeplitz_apply: kernel shorter than input");
  if (n <= 64) {
    out.assign(n + 1, 0.0);
    for (std::size_t l = 1; l <= n; ++l) {
      double s = 0.0;
      for (std::size_t k = 0; k < l; ++k) s += c[l - k - 1] * x[k];
      out[l] = s;
    }
    return;
  }
  toeplitz_fft(c, x, out);
}

PathEnsemble volterra_direct_naive(const VolterraKernel& K, const DriverPath& S) {
  check_kernel(K, S);
  const std::size_t P = S.P(), N = S.N();
  PathEnsemble X(P, N + 1);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> x;
    for (std::size_t w = b; w < e; ++w) {
      drive_increments(K, S, w, x);
      for (std::size_t l = 1; l <= N; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < l; ++k) s += K.psi(l, k) * x[k];
        X.at(w, l) = s;
      }
    }
  });
  return X;
}

PathEnsemble volterra_direct(const VolterraKernel& K, const DriverPath& S) {
  if (!K.toeplitz || S.N() <= 64) return volterra_direct_naive(K, S);
  check_kernel(K, S);
  const std::size_t P = S.P(), N = S.N();
  PathEnsemble X(P, N + 1);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> x, out;
    for (std::size_t w = b; w < e; ++w) {
      drive_increments(K, S, w, x);
      toeplitz_fft(K.conv, x, out);
      std::copy(out.begin(), out.end(), X.row_mut(w).begin());
    }
  });
  return X;
}

CompactGrid induced_grid(const VolterraKernel& K) { return CompactGrid(K.tg.T, K.tg.N); }

MeasureProcess induced_phi(const VolterraKernel& K, std::size_t d, const ScenarioSet& sc) {
  if (K.adapted() && K.scale_P != sc.size()) throw std::invalid_argument("induced_phi: scenario count mismatch");
  return MeasureProcess(induced_grid(K), K.tg, sc, d, Representation::volterra_induced,
                        std::make_shared<InducedSource>(K, d));
}

Decomposition decomposition(const VolterraKernel& K, const DriverPath& S, const PathEnsemble& V) {
  check_kernel(K, S);
  const std::size_t P = S.P(), N = S.N(), d = S.d(), A = N + 1;
  auto phi = induced_phi(K, d, S.scenarios);
  Decomposition dec;
  dec.diag = PathEnsemble(P, N + 1);
  dec.Y = PathEnsemble(P, N + 1);
  dec.Y_left = PathEnsemble(P, N + 1);
  std::vector<double> tab;
  if (phi.deterministic()) {
    tab.resize(N * phi.width());
    for (std::size_t k = 0; k < N; ++k) phi.fill(0, k, std::span<double>(tab.data() + k * phi.width(), phi.width()));
  }
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> buf(phi.width()), acc(A);
    for (std::size_t w = b; w < e; ++w) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double dg = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        const double* m = tab.empty() ? buf.data() : tab.data() + k * phi.width();
        if (tab.empty()) phi.fill(w, k, buf);
        for (std::size_t i = 0; i < d; ++i) {
          const double ds = S.ds(w, k, i);
          for (std::size_t j = 0; j < A; ++j) acc[j] += m[i * A + j] * ds;
          dg += K.mult(w, k) * K.diag[k] * ds;
        }
        dec.diag.at(w, k + 1) = dg;
        // charge at k+1 paired with I_[0, t_{k+2}]
        if (k + 2 <= N) {
          double s = 0.0;
          for (std::size_t j = 0; j <= k + 2; ++j) s += acc[j];
          dec.Y_left.at(w, k + 2) = s;
        }
      }
      double s = 0.0;
      for (std::size_t l = 0; l <= N; ++l) {
        s += acc[l];
        dec.Y.at(w, l) = s;
      }
    }
  });
  dec.X_direct = volterra_direct(K, S);
  dec.X_reconstructed = PathEnsemble(P, N + 1);
  for (std::size_t w = 0; w < P; ++w)
    for (std::size_t l = 0; l <= N; ++l) {
      const double x = dec.diag(w, l) + dec.Y(w, l);
      dec.X_reconstructed.at(w, l) = x;
      double diff = std::abs(x - dec.X_direct(w, l));
      if (std::isnan(diff)) diff = INFINITY;
      dec.max_diff = std::max(dec.max_diff, diff);
    }
  dec.integrable = variation_condition_check(K, S, V).integrable;
  return dec;
}

bool y_left_predictable(const Decomposition& dec, const ScenarioSet& sc) {
  if (!sc.is_tree()) throw std::logic_error("y_left_predictable: tree mode required");
  const std::size_t P = sc.size(), N = dec.Y_left.length() - 1;
  for (std::size_t l = 1; l <= N; ++l) {
    std::vector<double> first(sc.atom_count(l - 1), NAN);
    std::vector<char> seen(first.size(), 0);
    for (std::size_t w = 0; w < P; ++w) {
      const std::size_t a = sc.atom(w, l - 1);
      const double v = dec.Y_left(w, l);
      if (!seen[a]) {
        seen[a] = 1;
        first[a] = v;
      } else if (first[a] != v) {
        return false;
      }
    }
  }
  return true;
}

VariationCheck variation_condition_check(const VolterraKernel& K, const DriverPath& S, const PathEnsemble& V) {
  check_kernel(K, S);
  auto phi = induced_phi(K, S.d(), S.scenarios);
  auto pc = in_phi_check(phi, V);
  VariationCheck vc;
  vc.integrable = pc.member;
  vc.d_path = std::move(pc.d_path);
  vc.sup = pc.sup;
  vc.bad_scenario = pc.bad_scenario;
  vc.bad_index = pc.bad_index;
  return vc;
}

PathEnsemble protter_dominated(const VolterraKernel& K, const DriverPath& S) {
  check_kernel(K, S);
  if (!K.density) throw std::invalid_argument("protter_dominated: kernel has no time-derivative density");
  const std::size_t P = S.P(), N = S.N();
  const double dt = K.tg.dt();
  // weights c[m][k]: off-diagonal midpoint, triangle centroid on the diagonal
  std::vector<double> c(N * N, 0.0);
  for (std::size_t m = 0; m < N; ++m) {
    const double tm = K.tg.t(m);
    for (std::size_t k = 0; k < m; ++k)
      c[m * N + k] = dt * K.density(tm + 0.5 * dt, K.tg.t(k) + 0.5 * dt);
    c[m * N + m] = 0.5 * dt * K.density(tm + 2.0 * dt / 3.0, tm + dt / 3.0);
  }
  PathEnsemble X(P, N + 1);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> x;
    for (std::size_t w = b; w < e; ++w) {
      drive_increments(K, S, w, x);
      double diag = 0.0, outer = 0.0;
      for (std::size_t m = 0; m < N; ++m) {
        double inner = 0.0;
        for (std::size_t k = 0; k <= m; ++k) inner += c[m * N + k] * x[k];
        outer += inner;
        diag += K.diag[m] * x[m];
        X.at(w, m + 1) = diag + outer;
      }
    }
  });
  return X;
}

PathEnsemble simulate_volterra(const VolterraKernel& K, const DriverSpec& spec, const ScenarioSet& sc) {
  if (!K.toeplitz || K.adapted()) throw std::invalid_argument("simulate_volterra: deterministic toeplitz kernel required");
  validate(spec);
  const std::size_t P = sc.size(), N = K.N(), d = spec.dim;
  PathEnsemble X(P, N + 1);
  parallel_for(P, [&](std::size_t b, std::size_t e) {
    std::vector<double> s((N + 1) * d), x(N), out;
    for (std::size_t w = b; w < e; ++w) {
      simulate_scenario(spec, K.tg, sc, w, s);
      double dg = 0.0;
      auto row = X.row_mut(w);
      for (std::size_t k = 0; k < N; ++k) {
        double v = 0.0;
        for (std::size_t i = 0; i < d; ++i) v += s[(k + 1) * d + i] - s[k * d + i];
        x[k] = v;
      }
      toeplitz_apply(K.conv, x, out);
      for (std::size_t l = 0; l <= N; ++l) {
        if (l > 0) dg += K.diag[l - 1] * x[l - 1];
        row[l] = out[l] + dg;
      }
    }
  });
  return X;
}

Diagnostic semimartingale_diagnostic(const PathEnsemble& Y, double T, const std::vector<std::size_t>& levels) {
  if (levels.size() < 3) throw std::invalid_argument("semimartingale_diagnostic: at least 3 refinement levels needed");
  const std::size_t N = Y.length() - 1, P = Y.scenarios();
  if (P == 0) throw std::invalid_argument("semimartingale_diagnostic: empty ensemble");
  Diagnostic dg;
  for (std::size_t n : levels) {
    if (n == 0 || N % n != 0) throw std::invalid_argument("semimartingale_diagnostic: level must divide the fine grid");
    const std::size_t step = N / n;
    double tot = 0.0;
    for (std::size_t w = 0; w < P; ++w) {
      double tv = 0.0;
      for (std::size_t i = 0; i < n; ++i) tv += std::abs(Y(w, (i + 1) * step) - Y(w, i * step));
      tot += tv;
    }
    dg.levels.push_back({n, T / static_cast<double>(n), tot / static_cast<double>(P)});
  }
  bool all_zero = true;
  for (const auto& l : dg.levels) all_zero = all_zero && l.tv == 0.0;
  if (all_zero) return dg;
  double mx = 0, my = 0;
  const double L = static_cast<double>(dg.levels.size());
  for (const auto& l : dg.levels) {
    mx += std::log(1.0 / l.h) / L;
    my += std::log(l.tv) / L;
  }
  double sxy = 0, sxx = 0;
  for (const auto& l : dg.levels) {
    const double x = std::log(1.0 / l.h) - mx;
    sxy += x * (std::log(l.tv) - my);
    sxx += x * x;
  }
  dg.slope = sxy / sxx;
  return dg;
}

DiagonalCheck diagonal_martingale_check(const VolterraKernel& K, const DriverPath& S) {
  check_kernel(K, S);
  const std::size_t P = S.P(), N = S.N();
  DiagonalCheck dc;
  dc.stat = PathEnsemble(P, N + 1);
  for (std::size_t w = 0; w < P; ++w) {
    double ss = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      double j = 0.0;
      for (std::size_t i = 0; i < S.d(); ++i) j += S.dj(w, k, i);
      const double v = K.mult(w, k) * K.diag[k] * j;
      ss += v * v;
      dc.stat.at(w, k + 1) = std::sqrt(ss);
    }
    dc.mean += S.scenarios.probability(w) * dc.stat(w, N);
  }
  dc.locally_integrable = std::isfinite(dc.mean);
  return dc;
}

std::string to_csv(const Diagnostic& d) {
  std::ostringstream os;
  os << "n,h,mean_tv\n";
  for (const auto& l : d.levels) os << l.n << ',' << fmt_num(l.h) << ',' << fmt_num(l.tv) << '\n';
  return os.str();
}

}  // namespace mvf
