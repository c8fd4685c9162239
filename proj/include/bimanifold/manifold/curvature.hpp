#pragma once

// Intrinsic curvature of implicitly defined submanifolds of flat space.
//
// For a level set M = {q : f(q) = c} with full-rank Jacobian J, the
// tangent space is null(J) and the normal space is row(J). Differentiating
// f along a curve in M twice gives
//
//   J * gamma'' + gamma'^T H gamma' = 0,
//
// so the normal part of the acceleration, i.e. the second fundamental form,
// follows from one small linear solve per tangent pair. The Gauss equation
// then gives the Riemann tensor of M in an orthonormal tangent basis:
//
//   R_ijkl = <II_ik, II_jl> - <II_il, II_jk>.
//
// Only J and H enter, never the value of f, so the same code evaluates the
// curvature of the level set through an off-manifold point.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bimanifold/errors.hpp"
#include "bimanifold/geometry/differentiation.hpp"

namespace bimanifold {

struct CurvatureOptions {
  DiffConfig diff;
  double rank_tolerance = 1e-8;  // smallest admissible singular value of J
  /// Diagonal ambient metric weights; empty means Euclidean.
  Eigen::VectorXd joint_weights;
};

struct ManifoldFrame {
  Eigen::VectorXd q;
  Eigen::MatrixXd jacobian;      // m x n, in metric-scaled coordinates
  Eigen::MatrixXd tangent_basis;  // n x (n - m), orthonormal
  Eigen::MatrixXd normal_basis;   // n x m, orthonormal
  double sigma_min = 0.0;
  double cond_j = 0.0;

  Eigen::Index ambient_dim() const { return jacobian.cols(); }
  Eigen::Index codim() const { return jacobian.rows(); }
  Eigen::Index dim() const { return tangent_basis.cols(); }
};

/// II[i][j] is a vector of normal coordinates; stored flat as (i, j, a).
class SecondFundamentalForm {
 public:
  SecondFundamentalForm(Eigen::Index dim, Eigen::Index codim)
      : dim_(dim), codim_(codim), data_(static_cast<std::size_t>(dim * dim * codim), 0.0) {}

  Eigen::Index dim() const { return dim_; }
  Eigen::Index codim() const { return codim_; }

  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index a) { return data_[index(i, j, a)]; }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index a) const { return data_[index(i, j, a)]; }

  Eigen::VectorXd at(Eigen::Index i, Eigen::Index j) const {
    Eigen::VectorXd v(codim_);
    for (Eigen::Index a = 0; a < codim_; ++a) v(a) = (*this)(i, j, a);
    return v;
  }

 private:
  std::size_t index(Eigen::Index i, Eigen::Index j, Eigen::Index a) const {
    return static_cast<std::size_t>((i * dim_ + j) * codim_ + a);
  }
  Eigen::Index dim_;
  Eigen::Index codim_;
  std::vector<double> data_;
};

/// Fully materialized Riemann tensor R_ijkl in an orthonormal basis.
class RiemannTensor {
 public:
  explicit RiemannTensor(Eigen::Index dim = 0)
      : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}

  Eigen::Index dim() const { return dim_; }
  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) {
    return data_[index(i, j, k, l)];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    return data_[index(i, j, k, l)];
  }
  const std::vector<double>& data() const { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

 private:
  std::size_t index(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    return static_cast<std::size_t>(((i * dim_ + j) * dim_ + k) * dim_ + l);
  }
  Eigen::Index dim_;
  std::vector<double> data_;
};

struct CurvatureResult {
  double kretschmann = 0.0;
  RiemannTensor riemann;
  double residual_norm = 0.0;
  double sigma_min = 0.0;
  double cond_j = 0.0;
};

namespace detail {

inline Eigen::VectorXd metric_scale(const CurvatureOptions& opt, Eigen::Index n) {
  if (opt.joint_weights.size() == 0) return Eigen::VectorXd::Ones(n);
  if (opt.joint_weights.size() != n || (opt.joint_weights.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "joint weights must be positive, one per coordinate");
  }
  return opt.joint_weights.cwiseSqrt().cwiseInverse();
}

}  // namespace detail

/// Orthonormal tangent/normal split from an SVD of J.
inline ManifoldFrame frame_from_jacobian(const Eigen::VectorXd& q, const Eigen::MatrixXd& jac, double rank_tolerance) {
  const Eigen::Index m = jac.rows();
  const Eigen::Index n = jac.cols();
  if (m >= n) throw Error(ErrorCode::InvalidArgument, "constraint must have fewer outputs than inputs");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  ManifoldFrame fr;
  fr.q = q;
  fr.jacobian = jac;
  fr.sigma_min = s(m - 1);
  fr.cond_j = s(0) / s(m - 1);
  if (!(fr.sigma_min > rank_tolerance)) {
    throw RankDeficientError(fr.sigma_min, "constraint Jacobian is rank deficient (sigma_min = " +
                                               std::to_string(fr.sigma_min) + ")");
  }
  fr.normal_basis = svd.matrixV().leftCols(m);
  fr.tangent_basis = svd.matrixV().rightCols(n - m);
  return fr;
}

template <class F>
ManifoldFrame frame_at(const F& f, const Eigen::VectorXd& q, const CurvatureOptions& opt = {}) {
  const Eigen::VectorXd scale = detail::metric_scale(opt, q.size());
  const Eigen::MatrixXd jac = jacobian_numeric(f, q, opt.diff) * scale.asDiagonal();
  return frame_from_jacobian(q, jac, opt.rank_tolerance);
}

/// Condition number of the metric-scaled Jacobian, without a rank check.
template <class F>
double jacobian_condition(const F& f, const Eigen::VectorXd& q, const CurvatureOptions& opt = {}) {
  const Eigen::VectorXd scale = detail::metric_scale(opt, q.size());
  const Eigen::MatrixXd jac = jacobian_numeric(f, q, opt.diff) * scale.asDiagonal();
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(jac).singularValues();
  return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

/// II from a frame and the (metric-scaled) Hessian slices of f.
inline SecondFundamentalForm second_fundamental_form(const ManifoldFrame& frame, const HessianTensor& hessian) {
  const Eigen::Index k = frame.dim();
  const Eigen::Index m = frame.codim();
  if (static_cast<Eigen::Index>(hessian.size()) != m) {
    throw Error(ErrorCode::InvalidArgument, "Hessian output count does not match the Jacobian");
  }
  const Eigen::MatrixXd jn = frame.jacobian * frame.normal_basis;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jn);
  // Tangent-projected Hessians: (U^T H_a U).
  std::vector<Eigen::MatrixXd> projected;
  projected.reserve(static_cast<std::size_t>(m));
  for (const Eigen::MatrixXd& h : hessian) {
    const Eigen::MatrixXd hs = 0.5 * (h + h.transpose());
    projected.push_back(frame.tangent_basis.transpose() * hs * frame.tangent_basis);
  }
  SecondFundamentalForm ii(k, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      for (Eigen::Index a = 0; a < m; ++a) rhs(a) = -projected[static_cast<std::size_t>(a)](i, j);
      const Eigen::VectorXd n = lu.solve(rhs);
      for (Eigen::Index a = 0; a < m; ++a) {
        ii(i, j, a) = n(a);
        ii(j, i, a) = n(a);
      }
    }
  }
  return ii;
}

/// Gauss equation in flat ambient space.
inline RiemannTensor riemann_from_second_fundamental_form(const SecondFundamentalForm& ii) {
  const Eigen::Index k = ii.dim();
  const Eigen::Index m = ii.codim();
  // Gram matrix G[(i,k),(j,l)] = <II_ik, II_jl>
  Eigen::MatrixXd flat(k * k, m);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index a = 0; a < m; ++a) flat(i * k + j, a) = ii(i, j, a);
  const Eigen::MatrixXd gram = flat * flat.transpose();
  RiemannTensor r(k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index kk = 0; kk < k; ++kk)
        for (Eigen::Index l = 0; l < k; ++l)
          r(i, j, kk, l) = gram(i * k + kk, j * k + l) - gram(i * k + l, j * k + kk);
  return r;
}

/// Curvature from a frame and Hessian, optionally in a rotated tangent basis
/// (`basis_rotation` is an orthogonal dim x dim matrix).
inline CurvatureResult curvature_from_frame(ManifoldFrame frame, const HessianTensor& hessian,
                                            const std::optional<Eigen::MatrixXd>& basis_rotation = std::nullopt) {
  if (basis_rotation) frame.tangent_basis = frame.tangent_basis * (*basis_rotation);
  CurvatureResult out;
  out.riemann = riemann_from_second_fundamental_form(second_fundamental_form(frame, hessian));
  out.kretschmann = out.riemann.squared_norm();
  out.sigma_min = frame.sigma_min;
  out.cond_j = frame.cond_j;
  return out;
}

inline HessianTensor scaled_hessian(HessianTensor h, const Eigen::VectorXd& scale) {
  for (Eigen::MatrixXd& slice : h) slice = scale.asDiagonal() * slice * scale.asDiagonal();
  return h;
}

/// Riemann tensor and Kretschmann scalar of the level set of f through q.
template <class F>
CurvatureResult riemann_and_kretschmann(const F& f, const Eigen::VectorXd& q, const CurvatureOptions& opt = {},
                                        const std::optional<Eigen::MatrixXd>& basis_rotation = std::nullopt) {
  const Eigen::VectorXd scale = detail::metric_scale(opt, q.size());
  const ManifoldFrame frame = frame_at(f, q, opt);
  const HessianTensor hess = scaled_hessian(hessian_numeric(f, q, opt.diff), scale);
  CurvatureResult out = curvature_from_frame(frame, hess, basis_rotation);
  out.residual_norm = detail::evaluate_checked(f, q).norm();
  return out;
}

struct SlopeProbe {
  std::vector<double> offsets;
  std::vector<double> deltas;  // |K(q + eps n) - K(q)|
  double slope = 0.0;          // least-squares log-log slope
};

/// Moves off the level set along the first normal direction and reports how
/// fast the Kretschmann scalar drifts. Diagnostic only.
template <class F>
SlopeProbe near_manifold_slope(const F& f, const Eigen::VectorXd& q, const std::vector<double>& offsets,
                               const CurvatureOptions& opt = {}) {
  const double k0 = riemann_and_kretschmann(f, q, opt).kretschmann;
  const Eigen::VectorXd n = frame_at(f, q, opt).normal_basis.col(0);
  SlopeProbe probe;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (double eps : offsets) {
    const double d = std::abs(riemann_and_kretschmann(f, Eigen::VectorXd(q + eps * n), opt).kretschmann - k0);
    probe.offsets.push_back(eps);
    probe.deltas.push_back(d);
    if (d > 0.0) {
      const double x = std::log(eps), y = std::log(d);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++count;
    }
  }
  if (count >= 2) probe.slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return probe;
}

}  // namespace bimanifold
