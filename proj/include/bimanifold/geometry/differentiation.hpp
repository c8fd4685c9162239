#pragma once

// Jacobians and Hessians of vector maps R^n -> R^m.
//
// A differentiable map is any object with a templated call operator
//   template <class T> VecX<T> operator()(const VecX<T>& x) const;
// so it can be evaluated with double, Dual<double> and Dual<Dual<double>>.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "bimanifold/errors.hpp"
#include "bimanifold/geometry/dual.hpp"
#include "bimanifold/geometry/so3.hpp"

namespace bimanifold {

enum class DiffMode { ForwardDual, CentralFD };

struct DiffConfig {
  DiffMode mode = DiffMode::ForwardDual;
  double fd_step = 1e-5;  // radians (or input units)

  void validate() const {
    if (!(fd_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "fd_step must be positive");
  }
};

inline const char* to_string(DiffMode m) { return m == DiffMode::ForwardDual ? "forward-dual" : "central-fd"; }

inline DiffMode diff_mode_from_string(const std::string& s) {
  if (s == "forward-dual" || s == "dual") return DiffMode::ForwardDual;
  if (s == "central-fd" || s == "fd") return DiffMode::CentralFD;
  throw Error(ErrorCode::InvalidArgument, "unknown derivative mode '" + s + "'");
}

/// One m x n slice per output.
using HessianTensor = std::vector<Eigen::MatrixXd>;

namespace detail {

template <class F, class T>
VecX<T> evaluate_checked(const F& f, const VecX<T>& x) {
  VecX<T> y;
  try {
    y = f(x);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::EvaluationFailure, e.what());
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(primal(y(i)))) throw Error(ErrorCode::EvaluationFailure, "non-finite output");
  }
  return y;
}

}  // namespace detail

template <class F>
Eigen::MatrixXd jacobian_numeric(const F& f, const Eigen::VectorXd& x, const DiffConfig& cfg = {}) {
  cfg.validate();
  const Eigen::Index n = x.size();
  if (cfg.mode == DiffMode::ForwardDual) {
    using D = Dual<double>;
    Eigen::MatrixXd jac;
    for (Eigen::Index j = 0; j < n; ++j) {
      VecX<D> xd(n);
      for (Eigen::Index i = 0; i < n; ++i) xd(i) = D(x(i), i == j ? 1.0 : 0.0);
      const VecX<D> y = detail::evaluate_checked(f, xd);
      if (j == 0) jac.resize(y.size(), n);
      for (Eigen::Index i = 0; i < y.size(); ++i) jac(i, j) = y(i).eps;
    }
    return jac;
  }
  const double h = cfg.fd_step;
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Eigen::VectorXd yp = detail::evaluate_checked(f, xp);
    const Eigen::VectorXd ym = detail::evaluate_checked(f, xm);
    if (j == 0) jac.resize(yp.size(), n);
    jac.col(j) = (yp - ym) / (2.0 * h);
  }
  return jac;
}

/// Each slice is symmetrized before returning.
template <class F>
HessianTensor hessian_numeric(const F& f, const Eigen::VectorXd& x, const DiffConfig& cfg = {}) {
  cfg.validate();
  const Eigen::Index n = x.size();
  HessianTensor hess;
  auto ensure = [&](Eigen::Index m) {
    if (hess.empty()) hess.assign(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(n, n));
  };
  if (cfg.mode == DiffMode::ForwardDual) {
    using D = Dual<double>;
    using DD = Dual<D>;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a; b < n; ++b) {
        VecX<DD> xd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          xd(i) = DD(D(x(i), i == b ? 1.0 : 0.0), D(i == a ? 1.0 : 0.0, 0.0));
        }
        const VecX<DD> y = detail::evaluate_checked(f, xd);
        ensure(y.size());
        for (Eigen::Index k = 0; k < y.size(); ++k) {
          hess[k](a, b) = y(k).eps.eps;
          hess[k](b, a) = y(k).eps.eps;
        }
      }
    }
    return hess;
  }
  const double h = cfg.fd_step;
  const Eigen::VectorXd y0 = detail::evaluate_checked(f, x);
  ensure(y0.size());
  for (Eigen::Index a = 0; a < n; ++a) {
    Eigen::VectorXd xp = x, xm = x;
    xp(a) += h;
    xm(a) -= h;
    const Eigen::VectorXd d2 =
        (detail::evaluate_checked(f, xp) - 2.0 * y0 + detail::evaluate_checked(f, xm)) / (h * h);
    for (Eigen::Index k = 0; k < y0.size(); ++k) hess[k](a, a) = d2(k);
    for (Eigen::Index b = a + 1; b < n; ++b) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp(a) += h; pp(b) += h;
      pm(a) += h; pm(b) -= h;
      mp(a) -= h; mp(b) += h;
      mm(a) -= h; mm(b) -= h;
      const Eigen::VectorXd mixed =
          (detail::evaluate_checked(f, pp) - detail::evaluate_checked(f, pm) -
           detail::evaluate_checked(f, mp) + detail::evaluate_checked(f, mm)) / (4.0 * h * h);
      for (Eigen::Index k = 0; k < y0.size(); ++k) {
        hess[k](a, b) = mixed(k);
        hess[k](b, a) = mixed(k);
      }
    }
  }
  return hess;
}

}  // namespace bimanifold
