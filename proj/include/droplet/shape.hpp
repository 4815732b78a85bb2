#pragma once

// Nearly-spherical shapes r = 1 + phi(omega) over S^2 and their geometry.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "droplet/params.hpp"
#include "droplet/sphere_basis.hpp"

namespace droplet {

namespace detail {

/// Max |f| over a grid oversampled 10x per direction relative to the
/// standard 2(L+1) x 4(L+1) grid.
inline double sampled_sup_norm(int l_max, std::span<const double> coeffs) {
  const auto basis = cached_basis(l_max, 10 * (l_max + 1) - 1);
  std::vector<double> f(basis->node_count());
  basis->synthesize(coeffs, f);
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace detail

/// phi = sum a_{l,k} Y_{l,k}, coefficients in harmonic_index order.
class ShapeCoeffs {
 public:
  static constexpr double kMaxSupNorm = 0.5;

  ShapeCoeffs() : ShapeCoeffs(0, std::vector<double>(1, 0.0)) {}

  ShapeCoeffs(int l_max, std::vector<double> coeffs) : l_max_(l_max), a_(std::move(coeffs)) {
    if (l_max < 0) throw InvalidArgument("shape l_max must be >= 0");
    if (static_cast<int>(a_.size()) != harmonic_count(l_max))
      throw InvalidArgument("shape needs " + std::to_string(harmonic_count(l_max)) + " coefficients, got " +
                            std::to_string(a_.size()));
    for (double v : a_)
      if (!std::isfinite(v)) throw InvalidArgument("non-finite shape coefficient");
    sup_ = detail::sampled_sup_norm(l_max_, a_);
    if (!(sup_ < kMaxSupNorm))
      throw InvalidArgument("shape is not nearly spherical: sampled |phi|_inf = " + std::to_string(sup_));
  }

  static ShapeCoeffs zero(int l_max) { return {l_max, std::vector<double>(harmonic_count(l_max), 0.0)}; }

  /// eps * Y_{l,k} embedded at degree l_max.
  static ShapeCoeffs single_mode(int l_max, int l, int k, double eps) {
    if (l > l_max || k < -l || k > l) throw InvalidArgument("mode outside shape degree");
    std::vector<double> a(harmonic_count(l_max), 0.0);
    a[harmonic_index(l, k)] = eps;
    return {l_max, std::move(a)};
  }

  [[nodiscard]] int l_max() const { return l_max_; }
  [[nodiscard]] int n() const { return 3; }
  [[nodiscard]] const std::vector<double>& coeffs() const { return a_; }
  [[nodiscard]] double coeff(int l, int k) const { return l > l_max_ ? 0.0 : a_[harmonic_index(l, k)]; }
  [[nodiscard]] double sup_norm() const { return sup_; }
  [[nodiscard]] bool is_zonal() const {
    for (int l = 0; l <= l_max_; ++l)
      for (int k = -l; k <= l; ++k)
        if (k != 0 && a_[harmonic_index(l, k)] != 0.0) return false;
    return true;
  }

  /// Same shape viewed at a larger (or equal) degree.
  [[nodiscard]] ShapeCoeffs padded(int l_max) const {
    if (l_max < l_max_) throw InvalidArgument("cannot pad to a smaller degree");
    std::vector<double> a(harmonic_count(l_max), 0.0);
    std::copy(a_.begin(), a_.end(), a.begin());
    return {l_max, std::move(a)};
  }

  friend bool operator==(const ShapeCoeffs& a, const ShapeCoeffs& b) {
    return a.l_max_ == b.l_max_ && a.a_ == b.a_;
  }

 private:
  int l_max_;
  std::vector<double> a_;
  double sup_ = 0.0;
};

struct SobolevSpec {
  double s = 1.0;
};

/// sqrt(sum (1 + l(l+1))^s a_{l,k}^2) for s in {0, 1/2, 1}.
inline double sobolev_norm(const ShapeCoeffs& shape, SobolevSpec spec = {}) {
  if (spec.s != 0.0 && spec.s != 0.5 && spec.s != 1.0)
    throw InvalidArgument("unsupported Sobolev order " + std::to_string(spec.s));
  double sum = 0.0;
  for (int l = 0; l <= shape.l_max(); ++l) {
    const double w = std::pow(1.0 + laplace_beltrami_eigenvalue(l), spec.s);
    for (int k = -l; k <= l; ++k) sum += w * shape.coeff(l, k) * shape.coeff(l, k);
  }
  return std::sqrt(sum);
}

/// Quadrature degree used for the geometric integrals of a degree-L shape;
/// generous because the perimeter integrand is not polynomial.
constexpr int geometry_quad_degree(int l_max) { return 4 * l_max + 12; }

inline std::shared_ptr<const SphereBasis> geometry_basis(int l_max) {
  return cached_basis(l_max, geometry_quad_degree(l_max));
}

/// Coefficients of `shape` in the ordering of `basis` (zero-padded).
inline std::vector<double> basis_coefficients(const ShapeCoeffs& shape, const SphereBasis& basis) {
  if (basis.l_max() < shape.l_max() && !basis.zonal())
    throw InvalidArgument("basis degree below shape degree");
  if (basis.zonal() && !shape.is_zonal()) throw InvalidArgument("zonal basis given a non-zonal shape");
  std::vector<double> c(basis.size(), 0.0);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const int idx = basis.full_index(j);
    if (idx < static_cast<int>(shape.coeffs().size())) c[j] = shape.coeffs()[idx];
  }
  return c;
}

/// Nodal values of phi and its tangential gradient.
struct SurfaceSample {
  std::vector<double> phi;
  std::vector<double> grad_theta;
  std::vector<double> grad_phi;
};

inline SurfaceSample sample_surface(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto c = basis_coefficients(shape, basis);
  SurfaceSample s;
  s.phi.resize(basis.node_count());
  s.grad_theta.resize(basis.node_count());
  s.grad_phi.resize(basis.node_count());
  basis.synthesize(c, s.phi, s.grad_theta, s.grad_phi);
  return s;
}

/// Reduce a basis-ordered gradient to full harmonic_index order of degree l_max.
inline std::vector<double> to_shape_order(std::span<const double> g, const SphereBasis& basis, int l_max) {
  std::vector<double> out(harmonic_count(l_max), 0.0);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const int idx = basis.full_index(j);
    if (idx < static_cast<int>(out.size())) out[idx] = g[j];
  }
  return out;
}

inline double volume(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto c = basis_coefficients(shape, basis);
  std::vector<double> f(basis.node_count());
  basis.synthesize(c, f);
  for (double& v : f) v = (1.0 + v) * (1.0 + v) * (1.0 + v) / 3.0;
  return basis.integrate(f);
}

inline double volume(const ShapeCoeffs& shape) { return volume(shape, *geometry_basis(shape.l_max())); }

/// First moment  int_Omega x dx = int_{S^2} omega (1+phi)^4 / 4.
inline std::array<double, 3> first_moment(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto c = basis_coefficients(shape, basis);
  std::vector<double> f(basis.node_count());
  basis.synthesize(c, f);
  std::array<double, 3> m{0.0, 0.0, 0.0};
  std::vector<double> g(f.size());
  for (int d = 0; d < 3; ++d) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double u = 1.0 + f[i];
      g[i] = u * u * u * u / 4.0 * basis.point(i)[d];
    }
    m[d] = basis.integrate(g);
  }
  return m;
}

inline std::array<double, 3> barycenter(const ShapeCoeffs& shape, const SphereBasis& basis) {
  auto m = first_moment(shape, basis);
  const double vol = volume(shape, basis);
  for (double& v : m) v /= vol;
  return m;
}

inline std::array<double, 3> barycenter(const ShapeCoeffs& shape) {
  return barycenter(shape, *geometry_basis(shape.l_max()));
}

inline double perimeter(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto s = sample_surface(shape, basis);
  std::vector<double> f(basis.node_count());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double u = 1.0 + s.phi[i];
    f[i] = u * std::sqrt(u * u + s.grad_theta[i] * s.grad_theta[i] + s.grad_phi[i] * s.grad_phi[i]);
  }
  return basis.integrate(f);
}

inline double perimeter(const ShapeCoeffs& shape) { return perimeter(shape, *geometry_basis(shape.l_max())); }

/// Exact coefficient gradients of the discrete volume / first moment /
/// perimeter integrals, in harmonic_index order of the shape's degree.
inline std::vector<double> volume_gradient(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto c = basis_coefficients(shape, basis);
  std::vector<double> f(basis.node_count());
  basis.synthesize(c, f);
  const auto w = basis.weights();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = w[i] * (1.0 + f[i]) * (1.0 + f[i]);
  std::vector<double> g(basis.size(), 0.0);
  basis.synthesize_adjoint(f, {}, {}, g);
  return to_shape_order(g, basis, shape.l_max());
}

inline std::vector<double> volume_gradient(const ShapeCoeffs& shape) {
  return volume_gradient(shape, *geometry_basis(shape.l_max()));
}

inline std::array<std::vector<double>, 3> first_moment_gradient(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto c = basis_coefficients(shape, basis);
  std::vector<double> f(basis.node_count());
  basis.synthesize(c, f);
  const auto w = basis.weights();
  std::array<std::vector<double>, 3> out;
  for (int d = 0; d < 3; ++d) {
    std::vector<double> h(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double u = 1.0 + f[i];
      h[i] = w[i] * u * u * u * basis.point(i)[d];
    }
    std::vector<double> g(basis.size(), 0.0);
    basis.synthesize_adjoint(h, {}, {}, g);
    out[d] = to_shape_order(g, basis, shape.l_max());
  }
  return out;
}

/// Gradient of the barycenter components (quotient rule on moment / volume).
inline std::array<std::vector<double>, 3> barycenter_gradient(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto dm = first_moment_gradient(shape, basis);
  const auto dv = volume_gradient(shape, basis);
  const auto m = first_moment(shape, basis);
  const double vol = volume(shape, basis);
  std::array<std::vector<double>, 3> out;
  for (int d = 0; d < 3; ++d) {
    out[d].resize(dv.size());
    for (std::size_t j = 0; j < dv.size(); ++j) out[d][j] = dm[d][j] / vol - m[d] * dv[j] / (vol * vol);
  }
  return out;
}

inline std::array<std::vector<double>, 3> barycenter_gradient(const ShapeCoeffs& shape) {
  return barycenter_gradient(shape, *geometry_basis(shape.l_max()));
}

inline std::vector<double> perimeter_gradient(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const auto s = sample_surface(shape, basis);
  const auto w = basis.weights();
  const std::size_t nn = basis.node_count();
  std::vector<double> fu(nn), ft(nn), fp(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const double u = 1.0 + s.phi[i];
    const double root = std::sqrt(u * u + s.grad_theta[i] * s.grad_theta[i] + s.grad_phi[i] * s.grad_phi[i]);
    fu[i] = w[i] * (root + u * u / root);
    ft[i] = w[i] * u * s.grad_theta[i] / root;
    fp[i] = w[i] * u * s.grad_phi[i] / root;
  }
  std::vector<double> g(basis.size(), 0.0);
  basis.synthesize_adjoint(fu, ft, fp, g);
  return to_shape_order(g, basis, shape.l_max());
}

inline std::vector<double> perimeter_gradient(const ShapeCoeffs& shape) {
  return perimeter_gradient(shape, *geometry_basis(shape.l_max()));
}

/// Adjusts a_{0,0} and a_{1,k} by Newton iteration so that the volume is
/// |B_1| and the first moment vanishes; l >= 2 coefficients are untouched.
inline ShapeCoeffs project_constraints(const ShapeCoeffs& shape, const SphereBasis& basis) {
  const double target = unit_ball_volume(3);
  if (shape.l_max() < 1) {
    // volume only: (1 + a0 Y00)^3 |B_1| = |B_1|  =>  a0 = 0
    return ShapeCoeffs::zero(shape.l_max());
  }
  // zonal shapes keep their symmetry: only a_{0,0} and a_{1,0} move
  const bool zonal = shape.is_zonal();
  const std::vector<int> idx = zonal ? std::vector<int>{harmonic_index(0, 0), harmonic_index(1, 0)}
                                     : std::vector<int>{harmonic_index(0, 0), harmonic_index(1, 1),
                                                        harmonic_index(1, -1), harmonic_index(1, 0)};
  const std::vector<int> rows = zonal ? std::vector<int>{0, 3} : std::vector<int>{0, 1, 2, 3};
  const int dim = static_cast<int>(idx.size());
  std::vector<double> a = shape.coeffs();
  const int l = shape.l_max();
  auto residual = [&](const ShapeCoeffs& s) {
    const auto m = first_moment(s, basis);
    const Eigen::Vector4d full(volume(s, basis) - target, m[0], m[1], m[2]);
    Eigen::VectorXd r(dim);
    for (int c = 0; c < dim; ++c) r[c] = full[rows[c]];
    return r;
  };
  auto converged = [](const Eigen::VectorXd& r, double tol) { return r.cwiseAbs().maxCoeff() <= tol; };
  ShapeCoeffs cur = shape;
  Eigen::VectorXd r = residual(cur);
  for (int iter = 0; iter < 50 && !converged(r, 1e-15); ++iter) {
    const auto dv = volume_gradient(cur, basis);
    const auto dm = first_moment_gradient(cur, basis);
    Eigen::MatrixXd jac(dim, dim);
    for (int c = 0; c < dim; ++c) {
      for (int rr = 0; rr < dim; ++rr) jac(rr, c) = rows[rr] == 0 ? dv[idx[c]] : dm[rows[rr] - 1][idx[c]];
    }
    const Eigen::VectorXd step = jac.partialPivLu().solve(r);
    if (!step.allFinite()) throw SolverError("constraint projection: singular Jacobian");
    for (int c = 0; c < dim; ++c) a[idx[c]] -= step[c];
    cur = ShapeCoeffs(l, a);
    const Eigen::VectorXd r_new = residual(cur);
    // stagnation at rounding level
    if (step.norm() < 1e-15 && r_new.norm() >= r.norm()) {
      r = r_new;
      break;
    }
    r = r_new;
  }
  if (converged(r, 1e-13)) return cur;
  throw SolverError("constraint projection did not converge");
}

inline ShapeCoeffs project_constraints(const ShapeCoeffs& shape) {
  return project_constraints(shape, *geometry_basis(shape.l_max()));
}

/// Deterministic random shape: degrees 2..l_max, coefficients uniform in
/// [-1, 1] damped by 1/(1+l), then scaled so the oversampled sup norm equals
/// `amplitude`.
inline ShapeCoeffs random_shape(std::uint64_t seed, int l_max, double amplitude) {
  if (!(amplitude >= 0.0 && amplitude < ShapeCoeffs::kMaxSupNorm))
    throw InvalidArgument("amplitude must lie in [0, 1/2)");
  std::vector<double> a(harmonic_count(l_max), 0.0);
  if (amplitude == 0.0 || l_max < 2) return {l_max, std::move(a)};
  std::mt19937_64 gen(seed);
  // bit-level uniform so the stream does not depend on the standard library
  auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  for (int l = 2; l <= l_max; ++l)
    for (int k = -l; k <= l; ++k) a[harmonic_index(l, k)] = (2.0 * uniform() - 1.0) / (1.0 + l);
  const double sup = detail::sampled_sup_norm(l_max, a);
  if (sup == 0.0) return {l_max, std::vector<double>(a.size(), 0.0)};
  for (double& v : a) v *= amplitude / sup;
  return {l_max, std::move(a)};
}

using Rotation = std::array<std::array<double, 3>, 3>;

/// Coefficients of phi o R^T, i.e. the shape rotated by R.
inline ShapeCoeffs rotate(const ShapeCoeffs& shape, const Rotation& rot) {
  const auto basis = cached_basis(shape.l_max());
  std::vector<double> f(basis->node_count());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& p = basis->point(i);
    std::array<double, 3> q{};
    for (int d = 0; d < 3; ++d) q[d] = rot[0][d] * p[0] + rot[1][d] * p[1] + rot[2][d] * p[2];
    const auto y = evaluate_harmonics(shape.l_max(), q);
    double v = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) v += shape.coeffs()[j] * y[j];
    f[i] = v;
  }
  const auto c = basis->analyze(f);
  return {shape.l_max(), to_shape_order(c, *basis, shape.l_max())};
}

/// Coordinate permutations used as exact test rotations.
inline Rotation swap_xy() { return {{{0, 1, 0}, {1, 0, 0}, {0, 0, -1}}}; }
inline Rotation swap_xz() { return {{{0, 0, 1}, {0, -1, 0}, {1, 0, 0}}}; }
inline Rotation cycle_xyz() { return {{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}}; }

}  // namespace droplet
