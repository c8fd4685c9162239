#pragma once

// Forward-mode dual numbers.
//
//   f(a + e a') = f(a) + e a' f'(a),   e^2 = 0
//
// Dual<T> carries one tangent. Nesting Dual<Dual<double>> with independent
// seeds on the inner and outer tangents yields a mixed second derivative in
// the eps.eps slot, which is how hessian_numeric gets exact Hessians.

#include <cmath>
#include <type_traits>

#include <Eigen/Core>

namespace bimanifold {

template <class T>
struct Dual {
  T val{};
  T eps{};

  constexpr Dual() = default;
  constexpr Dual(const T& v, const T& d) : val(v), eps(d) {}
  constexpr Dual(const T& v) : val(v), eps(T(0)) {}  // NOLINT: constants promote implicitly
  template <class U>
    requires(std::is_arithmetic_v<U> && !std::is_same_v<U, T>)
  constexpr Dual(U v) : val(T(v)), eps(T(0)) {}  // NOLINT

  constexpr Dual& operator+=(const Dual& o) { val += o.val; eps += o.eps; return *this; }
  constexpr Dual& operator-=(const Dual& o) { val -= o.val; eps -= o.eps; return *this; }
  constexpr Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  constexpr Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.val + b.val, a.eps + b.eps}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.val - b.val, a.eps - b.eps}; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.val, -a.eps}; }
  friend constexpr Dual operator+(const Dual& a) { return a; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.val * b.val, a.val * b.eps + a.eps * b.val};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    T inv = T(1) / b.val;
    return {a.val * inv, (a.eps * b.val - a.val * b.eps) * inv * inv};
  }

  // Comparisons look at the primal value only.
  friend constexpr bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
  friend constexpr bool operator>(const Dual& a, const Dual& b) { return a.val > b.val; }
  friend constexpr bool operator<=(const Dual& a, const Dual& b) { return a.val <= b.val; }
  friend constexpr bool operator>=(const Dual& a, const Dual& b) { return a.val >= b.val; }
  friend constexpr bool operator==(const Dual& a, const Dual& b) { return a.val == b.val; }
  friend constexpr bool operator!=(const Dual& a, const Dual& b) { return a.val != b.val; }
};

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};
template <class T> inline constexpr bool is_dual_v = is_dual<T>::value;

/// Primal double value of a scalar, recursing through nested duals.
inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) { return primal(x.val); }

template <class T>
Dual<T> sin(const Dual<T>& a) {
  using std::sin, std::cos;
  return {sin(a.val), a.eps * cos(a.val)};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  using std::sin, std::cos;
  return {cos(a.val), -a.eps * sin(a.val)};
}
template <class T>
Dual<T> tan(const Dual<T>& a) {
  using std::tan;
  T t = tan(a.val);
  return {t, a.eps * (T(1) + t * t)};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  T e = exp(a.val);
  return {e, a.eps * e};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.val), a.eps / a.val};
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.val);
  return {s, a.eps / (T(2) * s)};
}
template <class T>
Dual<T> atan(const Dual<T>& a) {
  using std::atan;
  return {atan(a.val), a.eps / (T(1) + a.val * a.val)};
}
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  T r2 = x.val * x.val + y.val * y.val;
  return {atan2(y.val, x.val), (x.val * y.eps - y.val * x.eps) / r2};
}
template <class T>
Dual<T> acos(const Dual<T>& a) {
  using std::acos, std::sqrt;
  return {acos(a.val), -a.eps / sqrt(T(1) - a.val * a.val)};
}
template <class T>
Dual<T> asin(const Dual<T>& a) {
  using std::asin, std::sqrt;
  return {asin(a.val), a.eps / sqrt(T(1) - a.val * a.val)};
}
template <class T>
Dual<T> abs(const Dual<T>& a) {
  return primal(a) < 0.0 ? -a : a;
}
template <class T>
Dual<T> abs2(const Dual<T>& a) {
  return a * a;
}
template <class T>
bool isfinite(const Dual<T>& a) {
  using std::isfinite;
  return isfinite(a.val) && isfinite(a.eps);
}

}  // namespace bimanifold

namespace Eigen {

template <class T>
struct NumTraits<bimanifold::Dual<T>> : NumTraits<double> {
  using Real = bimanifold::Dual<T>;
  using NonInteger = bimanifold::Dual<T>;
  using Nested = bimanifold::Dual<T>;
  using Literal = bimanifold::Dual<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2 * NumTraits<T>::ReadCost,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost + NumTraits<T>::AddCost,
  };
};

}  // namespace Eigen
