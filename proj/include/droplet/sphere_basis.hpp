#pragma once

// Real orthonormal spherical harmonics on S^2 sampled on a Gauss-Legendre x
// uniform-azimuth product grid, with separable synthesis/adjoint transforms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "droplet/params.hpp"
#include "droplet/quadrature.hpp"

namespace droplet {

/// Flat index of Y_{l,k}, k in [-l, l], ordered (l, k) lexicographically.
constexpr int harmonic_index(int l, int k) { return l * l + l + k; }
constexpr int harmonic_count(int l_max) { return (l_max + 1) * (l_max + 1); }

/// Eigenvalue of -Laplace-Beltrami on S^{n-1} for degree l.
constexpr double laplace_beltrami_eigenvalue(int l, int n = 3) {
  return static_cast<double>(l) * static_cast<double>(l + n - 2);
}

namespace detail {

/// Fully normalized associated Legendre values Pbar_l^m(cos theta) for
/// 0 <= m <= l <= l_max, no Condon-Shortley phase, so that the real harmonic
/// sqrt(2) Pbar_l^m cos(m phi) has unit L^2 norm on S^2. Stored at [l][m].
inline std::vector<std::vector<double>> normalized_legendre(int l_max, double x, double s) {
  std::vector<std::vector<double>> p(l_max + 1);
  for (int l = 0; l <= l_max; ++l) p[l].assign(l + 1, 0.0);
  p[0][0] = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int m = 1; m <= l_max; ++m)
    p[m][m] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[m - 1][m - 1];
  for (int m = 0; m < l_max; ++m) p[m + 1][m] = std::sqrt(2.0 * m + 3.0) * x * p[m][m];
  for (int m = 0; m <= l_max; ++m) {
    for (int l = m + 2; l <= l_max; ++l) {
      const double ll = static_cast<double>(l) * l;
      const double mm = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * ll - 1.0) / (ll - mm));
      const double lm1 = static_cast<double>(l - 1);
      const double b = std::sqrt((lm1 * lm1 - mm) / (4.0 * lm1 * lm1 - 1.0));
      p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
    }
  }
  return p;
}

/// d/dtheta of normalized_legendre; requires sin(theta) != 0.
inline std::vector<std::vector<double>> normalized_legendre_dtheta(
    const std::vector<std::vector<double>>& p, double x, double s) {
  const int l_max = static_cast<int>(p.size()) - 1;
  std::vector<std::vector<double>> d(l_max + 1);
  for (int l = 0; l <= l_max; ++l) {
    d[l].assign(l + 1, 0.0);
    for (int m = 0; m <= l; ++m) {
      double prev = 0.0;
      if (l > m) {
        const double c = std::sqrt((2.0 * l + 1.0) * (static_cast<double>(l) * l - static_cast<double>(m) * m) /
                                   (2.0 * l - 1.0));
        prev = c * p[l - 1][m];
      }
      d[l][m] = (l * x * p[l][m] - prev) / s;
    }
  }
  return d;
}

inline double azimuthal(int k, double phi) {
  if (k > 0) return std::cos(k * phi);
  if (k < 0) return std::sin(-k * phi);
  return 1.0;
}

inline double azimuthal_dphi(int k, double phi) {
  if (k > 0) return -k * std::sin(k * phi);
  if (k < 0) return -k * std::cos(-k * phi);
  return 0.0;
}

}  // namespace detail

/// Values of every Y_{l,k}, l <= l_max, at one point of S^2 (flat index order).
inline std::vector<double> evaluate_harmonics(int l_max, double theta, double phi) {
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  const auto p = detail::normalized_legendre(l_max, x, s);
  std::vector<double> out(harmonic_count(l_max));
  for (int l = 0; l <= l_max; ++l) {
    for (int k = -l; k <= l; ++k) {
      const int m = k < 0 ? -k : k;
      const double norm = k == 0 ? 1.0 : std::numbers::sqrt2;
      out[harmonic_index(l, k)] = norm * p[l][m] * detail::azimuthal(k, phi);
    }
  }
  return out;
}

/// Cartesian point -> harmonic values.
inline std::vector<double> evaluate_harmonics(int l_max, const std::array<double, 3>& x) {
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  const double theta = std::acos(std::clamp(x[2] / r, -1.0, 1.0));
  const double phi = std::atan2(x[1], x[0]);
  return evaluate_harmonics(l_max, theta, phi);
}

/// Harmonic basis up to degree `l_max` together with a product quadrature on
/// S^2. The quadrature has 2(q+1) Gauss-Legendre polar nodes and 4(q+1)
/// azimuthal nodes with q = quad_degree >= l_max; it integrates spherical
/// polynomials of degree <= 2q+1 exactly.
///
/// A zonal basis keeps only the k = 0 harmonics and a single azimuth node.
class SphereBasis {
 public:
  static SphereBasis build(int l_max, int n = 3, int quad_degree = -1, bool zonal = false) {
    if (l_max < 0) throw InvalidArgument("l_max must be >= 0");
    if (n != 3) throw InvalidArgument("sampled spherical basis supports n = 3 only");
    if (quad_degree < l_max) quad_degree = l_max;
    SphereBasis b;
    b.l_max_ = l_max;
    b.quad_degree_ = quad_degree;
    b.zonal_ = zonal;
    b.n_theta_ = 2 * (quad_degree + 1);
    b.n_phi_ = zonal ? 1 : 4 * (quad_degree + 1);

    for (int l = 0; l <= l_max; ++l) {
      for (int k = -l; k <= l; ++k) {
        if (zonal && k != 0) continue;
        b.l_.push_back(l);
        b.k_.push_back(k);
      }
    }
    const int nh = static_cast<int>(b.l_.size());
    b.k_groups_.resize(2 * l_max + 1);
    for (int j = 0; j < nh; ++j) b.k_groups_[b.k_[j] + l_max].push_back(j);
    b.full_index_.resize(nh);
    for (int j = 0; j < nh; ++j) b.full_index_[j] = harmonic_index(b.l_[j], b.k_[j]);

    const GaussRule gl = gauss_legendre(b.n_theta_);
    b.theta_.resize(b.n_theta_);
    b.sin_theta_.resize(b.n_theta_);
    b.cos_theta_.resize(b.n_theta_);
    b.leg_.assign(static_cast<std::size_t>(nh) * b.n_theta_, 0.0);
    b.dleg_.assign(static_cast<std::size_t>(nh) * b.n_theta_, 0.0);
    for (int t = 0; t < b.n_theta_; ++t) {
      // descending x so theta ascends
      const double x = gl.nodes[b.n_theta_ - 1 - t];
      const double s = std::sqrt(1.0 - x * x);
      b.theta_[t] = std::acos(x);
      b.cos_theta_[t] = x;
      b.sin_theta_[t] = s;
      const auto p = detail::normalized_legendre(l_max, x, s);
      const auto d = detail::normalized_legendre_dtheta(p, x, s);
      for (int j = 0; j < nh; ++j) {
        const int l = b.l_[j];
        const int k = b.k_[j];
        const int m = k < 0 ? -k : k;
        const double norm = k == 0 ? 1.0 : std::numbers::sqrt2;
        b.leg_[static_cast<std::size_t>(j) * b.n_theta_ + t] = norm * p[l][m];
        b.dleg_[static_cast<std::size_t>(j) * b.n_theta_ + t] = norm * d[l][m];
      }
    }
    const double dphi = 2.0 * std::numbers::pi / b.n_phi_;
    b.phi_.resize(b.n_phi_);
    for (int q = 0; q < b.n_phi_; ++q) b.phi_[q] = q * dphi;
    const int nk = 2 * l_max + 1;
    b.trig_.assign(static_cast<std::size_t>(nk) * b.n_phi_, 0.0);
    b.dtrig_.assign(static_cast<std::size_t>(nk) * b.n_phi_, 0.0);
    for (int k = -l_max; k <= l_max; ++k) {
      for (int q = 0; q < b.n_phi_; ++q) {
        b.trig_[static_cast<std::size_t>(k + l_max) * b.n_phi_ + q] = detail::azimuthal(k, b.phi_[q]);
        b.dtrig_[static_cast<std::size_t>(k + l_max) * b.n_phi_ + q] = detail::azimuthal_dphi(k, b.phi_[q]);
      }
    }
    const std::size_t nn = b.node_count();
    b.weights_.resize(nn);
    b.points_.resize(nn);
    for (int t = 0; t < b.n_theta_; ++t) {
      for (int q = 0; q < b.n_phi_; ++q) {
        const std::size_t node = static_cast<std::size_t>(t) * b.n_phi_ + q;
        b.weights_[node] = gl.weights[b.n_theta_ - 1 - t] * dphi;
        b.points_[node] = {b.sin_theta_[t] * std::cos(b.phi_[q]), b.sin_theta_[t] * std::sin(b.phi_[q]),
                           b.cos_theta_[t]};
      }
    }
    return b;
  }

  [[nodiscard]] int l_max() const { return l_max_; }
  [[nodiscard]] int quad_degree() const { return quad_degree_; }
  [[nodiscard]] bool zonal() const { return zonal_; }
  [[nodiscard]] std::size_t size() const { return l_.size(); }
  [[nodiscard]] int degree(std::size_t j) const { return l_[j]; }
  [[nodiscard]] int order(std::size_t j) const { return k_[j]; }
  /// Position of basis element j in the full (l, k) ordering.
  [[nodiscard]] int full_index(std::size_t j) const { return full_index_[j]; }

  [[nodiscard]] int n_theta() const { return n_theta_; }
  [[nodiscard]] int n_phi() const { return n_phi_; }
  [[nodiscard]] std::size_t node_count() const { return static_cast<std::size_t>(n_theta_) * n_phi_; }
  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] const std::array<double, 3>& point(std::size_t node) const { return points_[node]; }
  [[nodiscard]] double theta_at(std::size_t node) const { return theta_[node / n_phi_]; }
  [[nodiscard]] double phi_at(std::size_t node) const { return phi_[node % n_phi_]; }

  /// Y_j at a quadrature node.
  [[nodiscard]] double value(std::size_t j, std::size_t node) const {
    const std::size_t t = node / n_phi_;
    const std::size_t q = node % n_phi_;
    return leg_[j * n_theta_ + t] * trig_[static_cast<std::size_t>(k_[j] + l_max_) * n_phi_ + q];
  }

  /// Tangential gradient of Y_j at a node in the (e_theta, e_phi) frame.
  [[nodiscard]] std::array<double, 2> gradient(std::size_t j, std::size_t node) const {
    const std::size_t t = node / n_phi_;
    const std::size_t q = node % n_phi_;
    const std::size_t kk = static_cast<std::size_t>(k_[j] + l_max_) * n_phi_ + q;
    return {dleg_[j * n_theta_ + t] * trig_[kk], leg_[j * n_theta_ + t] * dtrig_[kk] / sin_theta_[t]};
  }

  /// Quadrature sum with compensated (Neumaier) accumulation; the grids get
  /// large enough that naive summation loses ~1e-13.
  [[nodiscard]] double integrate(std::span<const double> f) const {
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double v = weights_[i] * f[i];
      const double t = sum + v;
      comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
      sum = t;
    }
    return sum + comp;
  }

  /// Nodal values of sum_j c_j Y_j.
  void synthesize(std::span<const double> c, std::span<double> f) const {
    std::vector<double> s(static_cast<std::size_t>(n_theta_) * (2 * l_max_ + 1));
    legendre_pass(c, leg_, s);
    fourier_pass(s, trig_, f, false);
  }

  /// Nodal values and tangential gradient components of sum_j c_j Y_j.
  void synthesize(std::span<const double> c, std::span<double> f, std::span<double> g_theta,
                  std::span<double> g_phi) const {
    std::vector<double> s(static_cast<std::size_t>(n_theta_) * (2 * l_max_ + 1));
    std::vector<double> d(s.size());
    legendre_pass(c, leg_, s);
    legendre_pass(c, dleg_, d);
    fourier_pass(s, trig_, f, false);
    fourier_pass(d, trig_, g_theta, false);
    fourier_pass(s, dtrig_, g_phi, true);
  }

  /// Transpose of `synthesize` (no quadrature weights): out_j += sum_nodes
  /// f Y_j + g_theta dY_j/dtheta + g_phi (dY_j/dphi)/sin(theta).
  /// Any of the nodal inputs may be empty.
  void synthesize_adjoint(std::span<const double> f, std::span<const double> g_theta,
                          std::span<const double> g_phi, std::span<double> out) const {
    const std::size_t nk = 2 * l_max_ + 1;
    std::vector<double> s(static_cast<std::size_t>(n_theta_) * nk, 0.0);
    std::vector<double> d(s.size(), 0.0);
    if (!f.empty()) fourier_adjoint(f, trig_, s, false);
    if (!g_phi.empty()) fourier_adjoint(g_phi, dtrig_, s, true);
    if (!g_theta.empty()) fourier_adjoint(g_theta, trig_, d, false);
    legendre_adjoint(s, leg_, out);
    if (!g_theta.empty()) legendre_adjoint(d, dleg_, out);
  }

  /// L^2 projection of nodal values onto the basis (exact for band-limited f).
  [[nodiscard]] std::vector<double> analyze(std::span<const double> f) const {
    std::vector<double> fw(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) fw[i] = f[i] * weights_[i];
    std::vector<double> out(size(), 0.0);
    synthesize_adjoint(fw, {}, {}, out);
    return out;
  }

 private:
  void legendre_pass(std::span<const double> c, const std::vector<double>& table, std::vector<double>& s) const {
    const std::size_t nk = 2 * l_max_ + 1;
    std::fill(s.begin(), s.end(), 0.0);
    for (std::size_t kk = 0; kk < nk; ++kk) {
      for (int j : k_groups_[kk]) {
        const double cj = c[j];
        if (cj == 0.0) continue;
        const double* row = &table[static_cast<std::size_t>(j) * n_theta_];
        for (int t = 0; t < n_theta_; ++t) s[t * nk + kk] += cj * row[t];
      }
    }
  }

  void legendre_adjoint(const std::vector<double>& s, const std::vector<double>& table,
                        std::span<double> out) const {
    const std::size_t nk = 2 * l_max_ + 1;
    for (std::size_t kk = 0; kk < nk; ++kk) {
      for (int j : k_groups_[kk]) {
        const double* row = &table[static_cast<std::size_t>(j) * n_theta_];
        double acc = 0.0;
        for (int t = 0; t < n_theta_; ++t) acc += s[t * nk + kk] * row[t];
        out[j] += acc;
      }
    }
  }

  void fourier_pass(const std::vector<double>& s, const std::vector<double>& trig, std::span<double> f,
                    bool divide_sin) const {
    const std::size_t nk = 2 * l_max_ + 1;
    for (int t = 0; t < n_theta_; ++t) {
      double* row = &f[static_cast<std::size_t>(t) * n_phi_];
      std::fill(row, row + n_phi_, 0.0);
      for (std::size_t kk = 0; kk < nk; ++kk) {
        const double a = s[t * nk + kk];
        if (a == 0.0) continue;
        const double* tr = &trig[kk * n_phi_];
        for (int q = 0; q < n_phi_; ++q) row[q] += a * tr[q];
      }
      if (divide_sin) {
        const double inv = 1.0 / sin_theta_[t];
        for (int q = 0; q < n_phi_; ++q) row[q] *= inv;
      }
    }
  }

  void fourier_adjoint(std::span<const double> f, const std::vector<double>& trig, std::vector<double>& s,
                       bool divide_sin) const {
    const std::size_t nk = 2 * l_max_ + 1;
    for (int t = 0; t < n_theta_; ++t) {
      const double* row = &f[static_cast<std::size_t>(t) * n_phi_];
      const double scale = divide_sin ? 1.0 / sin_theta_[t] : 1.0;
      for (std::size_t kk = 0; kk < nk; ++kk) {
        if (zonal_ && kk != static_cast<std::size_t>(l_max_)) continue;
        const double* tr = &trig[kk * n_phi_];
        double acc = 0.0;
        for (int q = 0; q < n_phi_; ++q) acc += row[q] * tr[q];
        s[t * nk + kk] += scale * acc;
      }
    }
  }

  int l_max_ = 0;
  int quad_degree_ = 0;
  bool zonal_ = false;
  int n_theta_ = 0;
  int n_phi_ = 0;
  std::vector<int> l_;
  std::vector<int> k_;
  std::vector<int> full_index_;
  std::vector<std::vector<int>> k_groups_;
  std::vector<double> theta_;
  std::vector<double> sin_theta_;
  std::vector<double> cos_theta_;
  std::vector<double> phi_;
  std::vector<double> leg_;
  std::vector<double> dleg_;
  std::vector<double> trig_;
  std::vector<double> dtrig_;
  std::vector<double> weights_;
  std::vector<std::array<double, 3>> points_;
};

/// Shared, lazily built basis keyed by (l_max, quad_degree, zonal).
inline std::shared_ptr<const SphereBasis> cached_basis(int l_max, int quad_degree = -1, bool zonal = false) {
  static std::mutex mutex;
  static std::map<std::array<int, 3>, std::shared_ptr<const SphereBasis>> cache;
  if (quad_degree < l_max) quad_degree = l_max;
  const std::array<int, 3> key{l_max, quad_degree, zonal ? 1 : 0};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto basis = std::make_shared<const SphereBasis>(SphereBasis::build(l_max, 3, quad_degree, zonal));
  cache.emplace(key, basis);
  return basis;
}

}  // namespace droplet
