#pragma once

#include <cmath>
#include <type_traits>

namespace tpgaze {

/// Forward-mode dual number v + d*eps with eps^2 = 0.
///
/// Running the reverse-mode tape over Dual scalars yields forward-over-reverse
/// derivatives: if the inputs carry a tangent direction, the gradient's `d`
/// parts are the Hessian-vector product along that direction.
template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  template <class U, class = std::enable_if_t<std::is_arithmetic_v<U>>>
  constexpr Dual(U value) : v(static_cast<T>(value)) {}  // NOLINT(implicit)
  constexpr Dual(T value, T tangent) : v(value), d(tangent) {}

  constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  constexpr Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  constexpr Dual& operator/=(const Dual& o) { d = (d * o.v - v * o.d) / (o.v * o.v); v /= o.v; return *this; }

  friend constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

  friend constexpr bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend constexpr bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend constexpr bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend constexpr bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
  friend constexpr bool operator==(const Dual& a, const Dual& b) { return a.v == b.v && a.d == b.d; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

/// Primal value of a scalar (identity for plain floats).
template <class T>
constexpr double primal(const T& x) {
  if constexpr (is_dual<T>::value) {
    return primal(x.v);
  } else {
    return static_cast<double>(x);
  }
}

template <class T>
bool is_finite_scalar(const T& x) {
  if constexpr (is_dual<T>::value) {
    return is_finite_scalar(x.v) && is_finite_scalar(x.d);
  } else {
    return std::isfinite(x);
  }
}

}  // namespace tpgaze
