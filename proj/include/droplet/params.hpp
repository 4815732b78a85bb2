#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace droplet {

/// Bad input: rejected parameters, malformed shapes, unsupported options.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to produce a usable result.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical constants of the droplet model.
///
/// `beta` is the permittivity inside the droplet (outside it is 1),
/// `K` weights the entropic penalty on the charge density and `Q` is the
/// total charge.
struct PhysicalParams {
  int n = 3;
  double beta = 2.0;
  double K = 1.0;
  double Q = 0.0;

  void validate() const {
    if (n < 3) throw InvalidArgument("dimension n must be >= 3, got " + std::to_string(n));
    if (!(beta > 1.0)) throw InvalidArgument("beta must be > 1, got " + std::to_string(beta));
    if (!(K > 0.0)) throw InvalidArgument("K must be > 0, got " + std::to_string(K));
    if (!(Q >= 0.0)) throw InvalidArgument("Q must be >= 0, got " + std::to_string(Q));
  }

  [[nodiscard]] double beta_K() const { return beta * K; }
};

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Surface area of the unit sphere S^{n-1}.
inline double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

}  // namespace droplet
