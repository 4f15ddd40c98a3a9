#pragma once

#include "tpgaze/autodiff.hpp"

namespace tpgaze {

namespace detail {

inline void require_gaze_shape(const Shape& s, const char* op) {
  if (s.size() != 2 || s[1] != 2) {
    throw DimensionError(std::string(op) + ": expected [batch,2] gaze rows, got " + shape_str(s));
  }
}

}  // namespace detail

/// Mean over batch and both angles of |pred - label|.
template <class T>
Var l1_gaze_loss(Tape<T>& tape, Var pred, Var label) {
  const Shape& ps = tape.value(pred).shape();
  detail::require_gaze_shape(ps, "l1_gaze_loss");
  if (ps != tape.value(label).shape()) {
    throw DimensionError("l1_gaze_loss: prediction " + shape_str(ps) + " vs label " +
                         shape_str(tape.value(label).shape()));
  }
  return ops::mean(tape, ops::abs(tape, ops::sub(tape, pred, label)));
}

/// Left-right symmetry loss: 1/2 * batch mean of || pred - M pred_flipped ||_1
/// with M = diag(1, -1), i.e. the flipped view should agree in pitch and have
/// the opposite yaw.
template <class T>
Var symmetry_loss(Tape<T>& tape, Var pred, Var pred_flipped) {
  const Shape& ps = tape.value(pred).shape();
  detail::require_gaze_shape(ps, "symmetry_loss");
  if (ps != tape.value(pred_flipped).shape()) {
    throw DimensionError("symmetry_loss: prediction " + shape_str(ps) + " vs flipped prediction " +
                         shape_str(tape.value(pred_flipped).shape()));
  }
  const int batch = ps[0];
  Tensor<T> m(ps);
  for (int i = 0; i < batch; ++i) {
    m[static_cast<std::size_t>(2 * i)] = T(1);
    m[static_cast<std::size_t>(2 * i + 1)] = T(-1);
  }
  const Var mirrored = ops::mul(tape, pred_flipped, tape.constant(std::move(m)));
  const Var per_elem = ops::abs(tape, ops::sub(tape, pred, mirrored));
  return ops::scalar_mul(tape, ops::sum(tape, per_elem), 0.5 / batch);
}

/// Unsupervised personalization loss: symmetry between f(x) and f(flip(x)).
/// `fwd` maps an image batch Var to its [N,2] prediction Var on `tape`.
template <class T, class Forward>
Var personalization_loss(Tape<T>& tape, Forward&& fwd, Var x) {
  const Var pred = fwd(x);
  const Var pred_flipped = fwd(ops::flip_horizontal(tape, x));
  return symmetry_loss(tape, pred, pred_flipped);
}

}  // namespace tpgaze
