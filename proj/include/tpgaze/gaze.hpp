#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace tpgaze {

/// Gaze direction in radians. Horizontal image flip negates yaw.
struct GazeLabel {
  double pitch = 0.0;
  double yaw = 0.0;

  friend bool operator==(const GazeLabel&, const GazeLabel&) = default;
};

/// Unit vector (-cos p sin y, -sin p, -cos p cos y); (0,0) looks down -z.
inline std::array<double, 3> gaze_to_vector(const GazeLabel& g) {
  const double cp = std::cos(g.pitch);
  return {-cp * std::sin(g.yaw), -std::sin(g.pitch), -cp * std::cos(g.yaw)};
}

/// Angle between the two gaze vectors, in degrees.
inline double angular_error(const GazeLabel& pred, const GazeLabel& truth) {
  const auto a = gaze_to_vector(pred);
  const auto b = gaze_to_vector(truth);
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::acos(std::clamp(dot, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace tpgaze
