#pragma once

// Discrete minimization of the dual functional
//   J(E) = min_psi  1/2 int a |grad psi|^2 + |E|^-1 int_E psi
//                   - (2 |E| K)^-1 (int_E psi)^2 + (2K)^-1 int_E psi^2
// (a = beta in E, 1 outside) pulled back to reference polar coordinates by a
// DomainMap.
//
// psi is expanded in real harmonics up to degree L at every radial node. The
// reference radius is discretized with N_r/2 uniform cells on [0, 1], N_r/4
// uniform cells on [1, 2] and N_r/4 geometric cells on [2, R_inf]; the
// interface rho = 1 is a node. Per cell the radial derivative lives at the
// midpoint and tangential/mass terms use the trapezoid rule; the mass is
// lumped with the exact physical cell volumes so that the discrete |E| is the
// quadrature volume of the shape. The exterior beyond R_inf is closed with
// the exact harmonic energy (l + 1) R_inf psi_l(R_inf)^2 / 2.
//
// The functional is 1/2 x^T H x + w^T x / |E| - (w^T x)^2 / (2 |E| K) with H
// positive definite and w the discrete integral over E, so its minimizer is
// alpha H^{-1} w; one preconditioned CG solve suffices.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "droplet/ball.hpp"
#include "droplet/domain_map.hpp"
#include "droplet/params.hpp"
#include "droplet/shape.hpp"
#include "droplet/sphere_basis.hpp"

namespace droplet {

struct SolverOptions {
  /// Angular degree of psi; negative means max(2 L_shape, 2).
  int l_max = -1;
  /// Angular quadrature degree; negative means l_max + L_shape.
  int quad_degree = -1;
  int n_r = 128;
  double r_inf = 20.0;
  double cg_tol = 1e-11;
  int max_iter = 5000;
  /// Use the k = 0 subspace and a single azimuth node (zonal shapes only).
  bool zonal = false;
  MapBlend blend{};

  void validate() const {
    if (n_r < 8 || n_r % 4 != 0) throw InvalidArgument("n_r must be a multiple of 4 and >= 8");
    if (!(r_inf > 2.0)) throw InvalidArgument("r_inf must exceed 2");
    if (!(cg_tol > 0.0)) throw InvalidArgument("cg_tol must be positive");
    if (max_iter <= 0) throw InvalidArgument("max_iter must be positive");
    blend.validate();
  }
};

struct RadialGrid {
  std::vector<double> rho;
  /// Index of the node at rho = 1.
  int interface = 0;

  [[nodiscard]] int nodes() const { return static_cast<int>(rho.size()); }
  [[nodiscard]] int cells() const { return nodes() - 1; }
  [[nodiscard]] double h(int c) const { return rho[c + 1] - rho[c]; }
};

inline RadialGrid make_radial_grid(int n_r, double r_inf) {
  const int n_in = n_r / 2;
  const int n_mid = n_r / 4;
  const int n_out = n_r - n_in - n_mid;
  RadialGrid g;
  for (int i = 0; i <= n_in; ++i) g.rho.push_back(static_cast<double>(i) / n_in);
  g.interface = n_in;
  for (int i = 1; i <= n_mid; ++i) g.rho.push_back(1.0 + static_cast<double>(i) / n_mid);
  const double ratio = r_inf / 2.0;
  for (int i = 1; i <= n_out; ++i) g.rho.push_back(2.0 * std::pow(ratio, static_cast<double>(i) / n_out));
  g.rho.back() = r_inf;
  return g;
}

/// Assembled discrete problem for one shape. Immutable after construction.
class TransmissionProblem {
 public:
  TransmissionProblem(const ShapeCoeffs& shape, const PhysicalParams& params, const SolverOptions& opts)
      : params_(params), opts_(opts), shape_(shape) {
    params.validate();
    opts.validate();
    if (params.n != 3) throw InvalidArgument("field solver supports n = 3 only");
    if (opts.zonal && !shape.is_zonal()) throw InvalidArgument("zonal solve requested for a non-zonal shape");
    const int L = opts.l_max >= 0 ? opts.l_max : std::max(2 * shape.l_max(), 2);
    if (L < shape.l_max()) throw InvalidArgument("solver degree below shape degree");
    const int q = opts.quad_degree >= 0 ? std::max(opts.quad_degree, L) : L + shape.l_max();
    basis_ = cached_basis(L, q, opts.zonal);
    map_ = std::make_shared<const DomainMap>(shape, basis_, opts.blend);
    grid_ = make_radial_grid(opts.n_r, opts.r_inf);
    assemble();
  }

  [[nodiscard]] const SphereBasis& basis() const { return *basis_; }
  [[nodiscard]] std::shared_ptr<const SphereBasis> basis_ptr() const { return basis_; }
  [[nodiscard]] const DomainMap& map() const { return *map_; }
  [[nodiscard]] const RadialGrid& grid() const { return grid_; }
  [[nodiscard]] const PhysicalParams& params() const { return params_; }
  [[nodiscard]] const SolverOptions& options() const { return opts_; }
  [[nodiscard]] const ShapeCoeffs& shape() const { return shape_; }
  [[nodiscard]] std::size_t harmonics() const { return basis_->size(); }
  [[nodiscard]] std::size_t size() const { return harmonics() * grid_.nodes(); }
  /// Discrete |E|.
  [[nodiscard]] double volume() const { return volume_; }
  /// Discrete integral over E as a linear form on coefficients.
  [[nodiscard]] const std::vector<double>& integral_form() const { return w_; }
  /// Lumped mass weight of reference node i at angular node k (physical
  /// volume per unit solid angle).
  [[nodiscard]] double mass_weight(int i, std::size_t k) const { return mass_[i * nn_ + k]; }
  [[nodiscard]] int transform_nodes() const { return n_t_; }

  /// y = H x.
  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t nh = harmonics();
    const auto& b = *basis_;
    std::fill(y.begin(), y.end(), 0.0);
    std::vector<double> f(static_cast<std::size_t>(n_t_) * nn_), gt(f.size()), gp(f.size());
    for (int i = 0; i < n_t_; ++i) {
      b.synthesize(x.subspan(i * nh, nh), std::span<double>(f).subspan(i * nn_, nn_),
                   std::span<double>(gt).subspan(i * nn_, nn_), std::span<double>(gp).subspan(i * nn_, nn_));
    }
    std::vector<double> F(f.size(), 0.0), Gt(f.size(), 0.0), Gp(f.size(), 0.0);
    const auto w = b.weights();
    const double invK = 1.0 / params_.K;
    for (int c = 0; c < n_t_ - 1; ++c) {
      const double h = grid_.h(c);
      const double a = c < grid_.interface ? params_.beta : 1.0;
      const std::size_t o0 = c * nn_;
      const std::size_t o1 = (c + 1) * nn_;
      for (std::size_t k = 0; k < nn_; ++k) {
        const CellCoeffs& cc = cell_[c * nn_ + k];
        const double q = (f[o1 + k] - f[o0 + k]) / h;
        const double mt = 0.5 * (gt[o0 + k] + gt[o1 + k]);
        const double mp = 0.5 * (gp[o0 + k] + gp[o1 + k]);
        const double s = a * h * w[k];
        const double fq = s * (cc.cqq * q + cc.cqg[0] * mt + cc.cqg[1] * mp) / h;
        F[o1 + k] += fq;
        F[o0 + k] -= fq;
        const double gmt = 0.5 * s * q * cc.cqg[0];
        const double gmp = 0.5 * s * q * cc.cqg[1];
        const double g0 = 0.5 * s * cgg_[o0 + k];
        const double g1 = 0.5 * s * cgg_[o1 + k];
        Gt[o0 + k] += gmt + g0 * gt[o0 + k];
        Gp[o0 + k] += gmp + g0 * gp[o0 + k];
        Gt[o1 + k] += gmt + g1 * gt[o1 + k];
        Gp[o1 + k] += gmp + g1 * gp[o1 + k];
      }
    }
    for (int i = 0; i <= grid_.interface; ++i) {
      const std::size_t o = i * nn_;
      for (std::size_t k = 0; k < nn_; ++k) F[o + k] += w[k] * mass_[o + k] * invK * f[o + k];
    }
    for (int i = 0; i < n_t_; ++i) {
      b.synthesize_adjoint(std::span<const double>(F).subspan(i * nn_, nn_),
                           std::span<const double>(Gt).subspan(i * nn_, nn_),
                           std::span<const double>(Gp).subspan(i * nn_, nn_), y.subspan(i * nh, nh));
    }
    // identity cells in coefficient space
    for (int c = n_t_ - 1; c < grid_.cells(); ++c) {
      const double h = grid_.h(c);
      const double cond = grid_.rho[c] * grid_.rho[c + 1];
      for (std::size_t j = 0; j < nh; ++j) {
        const double lam = lb_[j];
        const double x0 = x[c * nh + j];
        const double x1 = x[(c + 1) * nh + j];
        const double q = cond * (x1 - x0) / h;
        y[(c + 1) * nh + j] += q + 0.5 * h * lam * x1;
        y[c * nh + j] += -q + 0.5 * h * lam * x0;
      }
    }
    const int last = grid_.nodes() - 1;
    for (std::size_t j = 0; j < nh; ++j)
      y[last * nh + j] += (basis_->degree(j) + 1.0) * opts_.r_inf * x[last * nh + j];
    for (std::size_t j = 1; j < nh; ++j) y[j] = 0.0;
  }

  /// Quadratic part x^T H x with the gradient term's tangential contributions
  /// evaluated at cell midpoints instead of by the trapezoid rule, and mass
  /// terms by the midpoint rule on exact cell volumes. Returns
  /// {int a |grad psi|^2, int_E psi^2, int_E psi} under that quadrature.
  struct MidpointIntegrals {
    double gradient;
    double mass;
    double integral;
  };
  [[nodiscard]] MidpointIntegrals midpoint_integrals(std::span<const double> x) const {
    const std::size_t nh = harmonics();
    const auto& b = *basis_;
    const auto w = b.weights();
    MidpointIntegrals out{0.0, 0.0, 0.0};
    std::vector<double> f0(nn_), t0(nn_), p0(nn_), f1(nn_), t1(nn_), p1(nn_);
    b.synthesize(x.subspan(0, nh), f0, t0, p0);
    for (int c = 0; c < n_t_ - 1; ++c) {
      b.synthesize(x.subspan((c + 1) * nh, nh), f1, t1, p1);
      const double h = grid_.h(c);
      const double a = c < grid_.interface ? params_.beta : 1.0;
      for (std::size_t k = 0; k < nn_; ++k) {
        const CellCoeffs& cc = cell_[c * nn_ + k];
        const double q = (f1[k] - f0[k]) / h;
        const double mt = 0.5 * (t0[k] + t1[k]);
        const double mp = 0.5 * (p0[k] + p1[k]);
        out.gradient += a * h * w[k] *
                        (cc.cqq * q * q + 2.0 * q * (cc.cqg[0] * mt + cc.cqg[1] * mp) + cc.cgg * (mt * mt + mp * mp));
        if (c < grid_.interface) {
          const double vm = 0.5 * (f0[k] + f1[k]);
          out.mass += w[k] * cc.vol * vm * vm;
          out.integral += w[k] * cc.vol * vm;
        }
      }
      std::swap(f0, f1);
      std::swap(t0, t1);
      std::swap(p0, p1);
    }
    for (int c = n_t_ - 1; c < grid_.cells(); ++c) {
      const double h = grid_.h(c);
      const double cond = grid_.rho[c] * grid_.rho[c + 1];
      const double rm = 0.5 * (grid_.rho[c] + grid_.rho[c + 1]);
      (void)rm;
      for (std::size_t j = 0; j < nh; ++j) {
        const double x0 = x[c * nh + j];
        const double x1 = x[(c + 1) * nh + j];
        const double xm = 0.5 * (x0 + x1);
        out.gradient += cond * (x1 - x0) * (x1 - x0) / h + h * lb_[j] * xm * xm;
      }
    }
    const int last = grid_.nodes() - 1;
    for (std::size_t j = 0; j < nh; ++j)
      out.gradient += (basis_->degree(j) + 1.0) * opts_.r_inf * x[last * nh + j] * x[last * nh + j];
    return out;
  }

  /// z = P^{-1} r with the per-degree tridiagonal preconditioner.
  void precondition(std::span<const double> r, std::span<double> z) const {
    const std::size_t nh = harmonics();
    const int nn = grid_.nodes();
    std::vector<double> d(nn);
    for (std::size_t j = 0; j < nh; ++j) {
      const auto& t = tri_[basis_->degree(j)];
      const int start = basis_->degree(j) == 0 ? 0 : 1;
      // forward substitution with the stored LU factors
      for (int i = start; i < nn; ++i) {
        double v = r[i * nh + j];
        if (i > start) v -= t.lower[i] * d[i - 1];
        d[i] = v;
      }
      for (int i = nn - 1; i >= start; --i) {
        double v = d[i];
        if (i < nn - 1) v -= t.upper[i] * z[(i + 1) * nh + j];
        z[i * nh + j] = v / t.diag[i];
      }
      if (start == 1) z[j] = 0.0;
    }
  }

 private:
  struct CellCoeffs {
    double cqq;
    std::array<double, 2> cqg;
    double cgg;
    /// physical cell volume per unit solid angle
    double vol;
  };

  struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> lower;
    std::vector<double> upper;
  };

  void assemble() {
    const auto& b = *basis_;
    nn_ = b.node_count();
    const int nodes = grid_.nodes();
    n_t_ = 0;
    for (int i = 0; i < nodes; ++i)
      if (!map_->identity_at(grid_.rho[i])) n_t_ = i + 1;
    n_t_ = std::min(n_t_ + 1, nodes);

    std::vector<std::vector<MapPoint>> pts(n_t_, std::vector<MapPoint>(nn_));
    for (int i = 0; i < n_t_; ++i)
      for (std::size_t k = 0; k < nn_; ++k) pts[i][k] = map_->at(grid_.rho[i], k);

    cgg_.assign(static_cast<std::size_t>(n_t_) * nn_, 0.0);
    for (int i = 0; i < n_t_; ++i)
      for (std::size_t k = 0; k < nn_; ++k) cgg_[i * nn_ + k] = pts[i][k].R_rho;

    cell_.assign(static_cast<std::size_t>(std::max(n_t_ - 1, 0)) * nn_, CellCoeffs{});
    for (int c = 0; c < n_t_ - 1; ++c) {
      const double r0 = grid_.rho[c];
      const double r1 = grid_.rho[c + 1];
      const double rm = 0.5 * (r0 + r1);
      const double cond = r0 >= 1.0 ? r0 * r1 / (rm * rm) : 1.0;
      for (std::size_t k = 0; k < nn_; ++k) {
        const MapPoint p = map_->at(rm, k);
        const double s2 = p.s[0] * p.s[0] + p.s[1] * p.s[1];
        CellCoeffs& cc = cell_[c * nn_ + k];
        cc.cqq = cond * (p.R * p.R + s2) / p.R_rho;
        cc.cqg = {-p.s[0], -p.s[1]};
        cc.cgg = p.R_rho;
        const double R0 = pts[c][k].R;
        const double R1 = pts[c + 1][k].R;
        cc.vol = (R1 * R1 * R1 - R0 * R0 * R0) / 3.0;
      }
    }

    const int iface = grid_.interface;
    mass_.assign(static_cast<std::size_t>(iface + 1) * nn_, 0.0);
    for (int c = 0; c < iface; ++c) {
      for (std::size_t k = 0; k < nn_; ++k) {
        const double v = cell_[c * nn_ + k].vol;
        mass_[c * nn_ + k] += 0.5 * v;
        mass_[(c + 1) * nn_ + k] += 0.5 * v;
      }
    }
    const auto wq = b.weights();
    volume_ = 0.0;
    for (int i = 0; i <= iface; ++i)
      for (std::size_t k = 0; k < nn_; ++k) volume_ += wq[k] * mass_[i * nn_ + k];

    const std::size_t nh = b.size();
    w_.assign(size(), 0.0);
    std::vector<double> mw(nn_);
    for (int i = 0; i <= iface; ++i) {
      for (std::size_t k = 0; k < nn_; ++k) mw[k] = wq[k] * mass_[i * nn_ + k];
      b.synthesize_adjoint(mw, {}, {}, std::span<double>(w_).subspan(i * nh, nh));
    }
    for (std::size_t j = 1; j < nh; ++j) w_[j] = 0.0;

    lb_.resize(nh);
    for (std::size_t j = 0; j < nh; ++j) lb_[j] = laplace_beltrami_eigenvalue(b.degree(j));

    build_preconditioner();
  }

  void build_preconditioner() {
    const auto wq = basis_->weights();
    const double area = 4.0 * std::numbers::pi;
    const int nodes = grid_.nodes();
    std::vector<double> cqq(grid_.cells()), cgg(nodes, 1.0), mass(nodes, 0.0);
    for (int c = 0; c < grid_.cells(); ++c) {
      if (c < n_t_ - 1) {
        double acc = 0.0;
        for (std::size_t k = 0; k < nn_; ++k) acc += wq[k] * cell_[c * nn_ + k].cqq;
        cqq[c] = acc / area;
      } else {
        cqq[c] = grid_.rho[c] * grid_.rho[c + 1];
      }
    }
    for (int i = 0; i < n_t_; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nn_; ++k) acc += wq[k] * cgg_[i * nn_ + k];
      cgg[i] = acc / area;
    }
    for (int i = 0; i <= grid_.interface; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nn_; ++k) acc += wq[k] * mass_[i * nn_ + k];
      mass[i] = acc / area;
    }
    const int L = basis_->l_max();
    tri_.assign(L + 1, {});
    for (int l = 0; l <= L; ++l) {
      const double lam = laplace_beltrami_eigenvalue(l);
      std::vector<double> dg(nodes, 0.0), off(nodes, 0.0);
      for (int c = 0; c < grid_.cells(); ++c) {
        const double h = grid_.h(c);
        const double a = c < grid_.interface ? params_.beta : 1.0;
        const double k = a * cqq[c] / h;
        dg[c] += k + 0.5 * a * h * lam * cgg[c];
        dg[c + 1] += k + 0.5 * a * h * lam * cgg[c + 1];
        off[c] = -k;
      }
      for (int i = 0; i <= grid_.interface; ++i) dg[i] += mass[i] / params_.K;
      dg[nodes - 1] += (l + 1.0) * opts_.r_inf;
      Tridiagonal t;
      t.diag.assign(nodes, 1.0);
      t.lower.assign(nodes, 0.0);
      t.upper.assign(nodes, 0.0);
      const int start = l == 0 ? 0 : 1;
      t.diag[start] = dg[start];
      for (int i = start + 1; i < nodes; ++i) {
        t.lower[i] = off[i - 1] / t.diag[i - 1];
        t.upper[i - 1] = off[i - 1];
        t.diag[i] = dg[i] - t.lower[i] * off[i - 1];
      }
      tri_[l] = std::move(t);
    }
  }

  PhysicalParams params_;
  SolverOptions opts_;
  ShapeCoeffs shape_;
  std::shared_ptr<const SphereBasis> basis_;
  std::shared_ptr<const DomainMap> map_;
  RadialGrid grid_;
  std::size_t nn_ = 0;
  int n_t_ = 0;
  std::vector<CellCoeffs> cell_;
  std::vector<double> cgg_;
  std::vector<double> mass_;
  std::vector<double> w_;
  std::vector<double> lb_;
  std::vector<Tridiagonal> tri_;
  double volume_ = 0.0;
};

struct FieldSolution {
  std::shared_ptr<const TransmissionProblem> problem;
  /// Harmonic coefficients of the pulled-back minimizer, node-major.
  std::vector<double> psi;
  /// Unscaled solution of H x = w (useful as a warm start).
  std::vector<double> x;
  double J_E = 0.0;
  /// |discrete gradient of the functional| / |w| * |E|.
  double residual = 0.0;
  /// int_E psi.
  double psi_integral = 0.0;
  double volume = 0.0;
  int iterations = 0;
  /// CG energy never increased.
  bool monotone = true;

  [[nodiscard]] double value(int node, std::size_t j) const { return psi[node * problem->harmonics() + j]; }
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

inline FieldSolution solve_field(std::shared_ptr<const TransmissionProblem> prob,
                                 const std::vector<double>* warm_start = nullptr) {
  const auto& P = *prob;
  const std::size_t N = P.size();
  const auto& w = P.integral_form();
  std::vector<double> x(N, 0.0), r(N), z(N), p(N), Ap(N);
  if (warm_start != nullptr && warm_start->size() == N) x = *warm_start;
  P.apply(x, Ap);
  for (std::size_t i = 0; i < N; ++i) r[i] = w[i] - Ap[i];
  const double wnorm = std::sqrt(detail::dot(w, w));
  const double tol = P.options().cg_tol * wnorm;
  P.precondition(r, z);
  p = z;
  double rz = detail::dot(r, z);
  FieldSolution sol;
  double energy = -0.5 * (detail::dot(x, w) + detail::dot(x, r));
  int it = 0;
  double rnorm = std::sqrt(detail::dot(r, r));
  for (; it < P.options().max_iter && rnorm > tol; ++it) {
    P.apply(p, Ap);
    const double pAp = detail::dot(p, Ap);
    if (!(pAp > 0.0)) throw SolverError("CG breakdown: operator not positive definite");
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < N; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double e_new = -0.5 * (detail::dot(x, w) + detail::dot(x, r));
    if (e_new > energy + 1e-13 * std::abs(energy)) sol.monotone = false;
    energy = e_new;
    P.precondition(r, z);
    const double rz_new = detail::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
    rnorm = std::sqrt(detail::dot(r, r));
  }
  if (rnorm > tol) throw SolverError("CG did not converge in " + std::to_string(it) + " iterations");

  const double vol = P.volume();
  const double K = P.params().K;
  const double wx = detail::dot(w, x);
  const double denom = 1.0 - wx / (vol * K);
  if (!(denom > 0.0)) throw SolverError("rank-one update lost positivity");
  const double scale = -1.0 / (vol * denom);
  sol.problem = prob;
  sol.x = x;
  sol.psi.resize(N);
  for (std::size_t i = 0; i < N; ++i) sol.psi[i] = scale * x[i];
  P.apply(sol.psi, Ap);
  const double I = detail::dot(w, sol.psi);
  const double quad = detail::dot(sol.psi, Ap);
  sol.J_E = 0.5 * quad + I / vol - I * I / (2.0 * vol * K);
  double gnorm = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double g = Ap[i] + w[i] / vol - w[i] * I / (vol * K);
    gnorm += g * g;
  }
  sol.residual = std::sqrt(gnorm) * vol / wnorm;
  sol.psi_integral = I;
  sol.volume = vol;
  sol.iterations = it;
  return sol;
}

inline FieldSolution solve_field(const ShapeCoeffs& shape, const PhysicalParams& params,
                                 const SolverOptions& opts = {}, const std::vector<double>* warm_start = nullptr) {
  return solve_field(std::make_shared<const TransmissionProblem>(shape, params, opts), warm_start);
}

inline double j_energy(const ShapeCoeffs& shape, const PhysicalParams& params, const SolverOptions& opts = {}) {
  return solve_field(shape, params, opts).J_E;
}

struct GEnergies {
  double G_half;
  double G_paper;
};

inline GEnergies g_energy(const FieldSolution& field) {
  const double K = field.problem->params().K;
  const double gh = K / (2.0 * field.volume) - field.J_E;
  return {gh, 2.0 * gh};
}

inline GEnergies g_energy(const ShapeCoeffs& shape, const PhysicalParams& params, const SolverOptions& opts = {}) {
  return g_energy(solve_field(shape, params, opts));
}

/// u = -psi and rho sampled at every (radial node, angular node) pair.
struct FieldPair {
  std::vector<double> radius;
  std::vector<double> u;
  std::vector<double> rho;
  std::vector<char> inside;
  double G_paper = 0.0;
  /// Discrete int rho (lumped mass).
  double rho_integral = 0.0;
  /// max - min of u + K rho over interior samples.
  double identity_spread = 0.0;
};

inline FieldPair recover_pair(const FieldSolution& field) {
  const auto& P = *field.problem;
  const auto& b = P.basis();
  const std::size_t nh = P.harmonics();
  const std::size_t nn = b.node_count();
  const double K = P.params().K;
  const double shift = (K - field.psi_integral) / field.volume;
  FieldPair out;
  out.G_paper = shift;
  std::vector<double> f(nn);
  const auto wq = b.weights();
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < P.grid().nodes(); ++i) {
    b.synthesize(std::span<const double>(field.psi).subspan(i * nh, nh), f);
    const bool in = i <= P.grid().interface;
    for (std::size_t k = 0; k < nn; ++k) {
      const double rho_ref = P.grid().rho[i];
      const double R = rho_ref >= P.options().blend.outer_hi ? rho_ref : P.map().at(rho_ref, k).R;
      const double u = -f[k];
      const double rho = in ? (f[k] + shift) / K : 0.0;
      out.radius.push_back(R);
      out.u.push_back(u);
      out.rho.push_back(rho);
      out.inside.push_back(in ? 1 : 0);
      if (in) {
        out.rho_integral += wq[k] * P.mass_weight(i, k) * rho;
        lo = std::min(lo, u + K * rho);
        hi = std::max(hi, u + K * rho);
      }
    }
  }
  out.identity_spread = hi - lo;
  return out;
}

/// int a |grad u|^2 + K int rho^2 under the midpoint quadrature.
inline double direct_G_paper(const FieldSolution& field) {
  const auto& P = *field.problem;
  const auto mi = P.midpoint_integrals(field.psi);
  const double K = P.params().K;
  const double vol = field.volume;
  const double shift = (K - mi.integral) / vol;
  // K int rho^2 = (1/K) int (psi + shift)^2
  const double mass = (mi.mass + 2.0 * shift * mi.integral + shift * shift * vol) / K;
  return mi.gradient + mass;
}

/// |G_direct - (K/|E| - 2 J)| / |K/|E| - 2 J|.
inline double duality_residual(const FieldSolution& field) {
  const double K = field.problem->params().K;
  const double g = K / field.volume - 2.0 * field.J_E;
  return std::abs(direct_G_paper(field) - g) / std::abs(g);
}

/// Same check on the closed-form ball state.
inline double duality_residual(const BallState& ball) {
  const double g = ball_energies(ball, 0.0).G_paper;
  return std::abs(direct_G_paper(ball) - g) / std::abs(g);
}

}  // namespace droplet
