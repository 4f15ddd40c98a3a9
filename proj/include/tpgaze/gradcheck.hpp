#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tpgaze/autodiff.hpp"

namespace tpgaze {

/// Scalar function of one tensor, recorded on a 64-bit tape.
using ScalarFn = std::function<Var(Tape<double>&, Var)>;

struct GradCheckResult {
  /// max over checked coordinates of |analytic - fd| / max(1, |fd|)
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  /// Coordinates where the function is not smooth inside the stencil.
  std::vector<std::size_t> excluded;
};

/// Compares `analytic` against central differences of the black-box scalar
/// function `f` at `point`.
///
/// A coordinate is skipped when the function is not smooth inside the
/// stencil (ReLU or L1 kink): either the forward and backward one-sided
/// slopes differ by more than `kink_tol * max(1, |fd|)`, or the central
/// differences at h and h/2 differ by more than `smooth_tol * max(1, |fd|)`.
/// On a smooth function the two central differences agree to O(h^2), so the
/// second test catches kinks whose slope jump is too small for the first.
/// NaN evaluations throw NumericError naming the coordinate.
inline GradCheckResult fd_check(const std::function<double(const Tensor<double>&)>& f,
                                const Tensor<double>& analytic, const Tensor<double>& point, double h = 1e-4,
                                double kink_tol = 1e-2, double smooth_tol = 1e-6) {
  if (analytic.shape() != point.shape()) throw DimensionError("fd_check: gradient and point shapes differ");
  const double f0 = f(point);
  if (!std::isfinite(f0)) throw NumericError("grad_check: function is not finite at the point");

  GradCheckResult r;
  Tensor<double> probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + h;
    const double fp = f(probe);
    probe[i] = point[i] - h;
    const double fm = f(probe);
    probe[i] = point[i] + h / 2;
    const double fp_half = f(probe);
    probe[i] = point[i] - h / 2;
    const double fm_half = f(probe);
    probe[i] = point[i];
    if (!std::isfinite(fp) || !std::isfinite(fm) || !std::isfinite(fp_half) || !std::isfinite(fm_half)) {
      throw NumericError("grad_check: non-finite value at coordinate " + std::to_string(i));
    }
    const double fd = (fp - fm) / (2 * h);
    const double fd_half = (fp_half - fm_half) / h;
    const double scale = std::max(1.0, std::abs(fd));
    if (std::abs((fp - f0) / h - (f0 - fm) / h) > kink_tol * scale || std::abs(fd - fd_half) > smooth_tol * scale) {
      r.excluded.push_back(i);
      continue;
    }
    const double err = std::abs(analytic[i] - fd) / scale;
    ++r.checked;
    if (err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst_index = i;
    }
  }
  return r;
}

/// Reverse-mode gradient of `fn` checked with `fd_check`.
inline GradCheckResult grad_check(const ScalarFn& fn, const Tensor<double>& point, double h = 1e-4,
                                  double kink_tol = 1e-2) {
  auto eval = [&fn](const Tensor<double>& at) {
    Tape<double> tape;
    const Var x = tape.leaf(at, false);
    const Tensor<double>& v = tape.value(fn(tape, x));
    if (v.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
    return v[0];
  };
  Tape<double> tape;
  const Var x = tape.leaf(point, true);
  tape.backward(fn(tape, x));
  return fd_check(eval, tape.grad(x), point, h, kink_tol);
}

}  // namespace tpgaze
