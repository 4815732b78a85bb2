#pragma once

// Radial diffeomorphism of R^3 taking B_1 onto a nearly-spherical set E.
//
// In reference polar coordinates (rho, omega) the image radius R solves
//   R^3 = rho^3 + eta(rho) G(omega),   G = (1 + phi)^3 - 1.
// With eta = 1 this is the volume-preserving flow map near the sphere; eta
// is linear in rho^3 near the origin (so R is a radial scaling there) and
// blends to the identity for rho >= outer_hi.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "droplet/params.hpp"
#include "droplet/shape.hpp"
#include "droplet/sphere_basis.hpp"

namespace droplet {

/// Transition radii of the blending function eta.
struct MapBlend {
  double inner_lo = 0.8;
  double inner_hi = 0.95;
  double outer_lo = 1.05;
  double outer_hi = 1.9;

  void validate() const {
    if (!(0.0 <= inner_lo && inner_lo < inner_hi && inner_hi < 1.0 && 1.0 < outer_lo && outer_lo < outer_hi))
      throw InvalidArgument("map blend radii must satisfy 0 <= inner_lo < inner_hi < 1 < outer_lo < outer_hi");
  }
};

namespace detail {

struct Smoothstep {
  double value;
  double slope;
};

/// Quintic 0 -> 1 transition on [a, b] with vanishing first and second derivatives at the ends.
inline Smoothstep smoothstep(double x, double a, double b) {
  if (x <= a) return {0.0, 0.0};
  if (x >= b) return {1.0, 0.0};
  const double t = (x - a) / (b - a);
  return {t * t * t * (10.0 - 15.0 * t + 6.0 * t * t), 30.0 * t * t * (1.0 - t) * (1.0 - t) / (b - a)};
}

}  // namespace detail

/// Pointwise map quantities in reference polar coordinates. The tangential
/// gradient s of R is given in the orthonormal (e_theta, e_phi) frame.
struct MapPoint {
  double R;
  double R_rho;
  std::array<double, 2> s;
};

class DomainMap {
 public:
  DomainMap(const ShapeCoeffs& shape, std::shared_ptr<const SphereBasis> basis, MapBlend blend = {})
      : basis_(std::move(basis)), blend_(blend) {
    blend_.validate();
    const auto surf = sample_surface(shape, *basis_);
    const std::size_t nn = basis_->node_count();
    G_.resize(nn);
    dG_.resize(nn);
    phi_ = surf.phi;
    for (std::size_t k = 0; k < nn; ++k) {
      const double u = 1.0 + surf.phi[k];
      G_[k] = u * u * u - 1.0;
      dG_[k] = {3.0 * u * u * surf.grad_theta[k], 3.0 * u * u * surf.grad_phi[k]};
    }
  }

  [[nodiscard]] const SphereBasis& basis() const { return *basis_; }
  [[nodiscard]] const MapBlend& blend() const { return blend_; }
  [[nodiscard]] double phi(std::size_t k) const { return phi_[k]; }

  [[nodiscard]] double eta(double rho) const { return eta_pair(rho)[0]; }
  [[nodiscard]] double deta(double rho) const { return eta_pair(rho)[1]; }

  /// True when the map is the identity on the whole sphere of radius rho.
  [[nodiscard]] bool identity_at(double rho) const { return rho >= blend_.outer_hi; }

  [[nodiscard]] MapPoint at(double rho, std::size_t k) const {
    const auto [e, de] = eta_pair(rho);
    if (rho == 0.0) {
      const double s_lo = blend_.inner_lo * blend_.inner_lo * blend_.inner_lo;
      const double s_hi = blend_.inner_hi * blend_.inner_hi * blend_.inner_hi;
      return {0.0, std::cbrt(1.0 + 2.0 * G_[k] / (s_lo + s_hi)), {0.0, 0.0}};
    }
    const double cube = rho * rho * rho + e * G_[k];
    if (!(cube > 0.0)) throw InvalidArgument(degenerate_message(rho, k));
    const double R = std::cbrt(cube);
    const double R2 = R * R;
    const double R_rho = (3.0 * rho * rho + de * G_[k]) / (3.0 * R2);
    if (!(R_rho > 0.0)) throw InvalidArgument(degenerate_message(rho, k));
    return {R, R_rho, {e * dG_[k][0] / (3.0 * R2), e * dG_[k][1] / (3.0 * R2)}};
  }

  /// Jacobian determinant of T relative to the reference ball.
  [[nodiscard]] double jacobian(double rho, std::size_t k) const {
    const MapPoint p = at(rho, k);
    if (rho == 0.0) return p.R_rho * p.R_rho * p.R_rho;
    return p.R * p.R * p.R_rho / (rho * rho);
  }

  /// Pulled-back conductivity matrix DT^{-1} DT^{-T} J_T in the orthonormal
  /// (e_rho, e_theta, e_phi) reference frame; rho > 0.
  [[nodiscard]] std::array<std::array<double, 3>, 3> metric(double rho, std::size_t k) const {
    const MapPoint p = at(rho, k);
    const double s2 = p.s[0] * p.s[0] + p.s[1] * p.s[1];
    const double cqq = (p.R * p.R + s2) / p.R_rho;
    std::array<std::array<double, 3>, 3> a{};
    a[0][0] = cqq / (rho * rho);
    a[0][1] = a[1][0] = -p.s[0] / rho;
    a[0][2] = a[2][0] = -p.s[1] / rho;
    a[1][1] = a[2][2] = p.R_rho;
    return a;
  }

 private:
  // Inside, eta is a function of s = rho^3 whose slope 1 - chi(s) is tapered
  // to zero across [s_lo, s_hi] and normalized so eta(s_hi) = 1. Its slope
  // never exceeds 2 / (s_lo + s_hi), so dR^3/ds = 1 + G eta'(s) stays
  // positive whenever G > -(s_lo + s_hi) / 2.
  [[nodiscard]] std::array<double, 2> eta_pair(double rho) const {
    if (rho <= 1.0) {
      const double s = rho * rho * rho;
      const double s_lo = blend_.inner_lo * blend_.inner_lo * blend_.inner_lo;
      const double s_hi = blend_.inner_hi * blend_.inner_hi * blend_.inner_hi;
      if (s >= s_hi) return {1.0, 0.0};
      const double norm = 0.5 * (s_lo + s_hi);
      const double width = s_hi - s_lo;
      const double t = std::clamp((s - s_lo) / width, 0.0, 1.0);
      const double taper = width * t * t * t * t * (2.5 - 3.0 * t + t * t);
      const double chi = detail::smoothstep(s, s_lo, s_hi).value;
      return {(s - taper) / norm, 3.0 * rho * rho * (1.0 - chi) / norm};
    }
    const auto c = detail::smoothstep(rho, blend_.outer_lo, blend_.outer_hi);
    return {1.0 - c.value, -c.slope};
  }

  [[nodiscard]] std::string degenerate_message(double rho, std::size_t k) const {
    return "degenerate domain map at rho = " + std::to_string(rho) + ", theta = " +
           std::to_string(basis_->theta_at(k)) + ", phi = " + std::to_string(basis_->phi_at(k));
  }

  std::shared_ptr<const SphereBasis> basis_;
  MapBlend blend_;
  std::vector<double> phi_;
  std::vector<double> G_;
  std::vector<std::array<double, 2>> dG_;
};

}  // namespace droplet
