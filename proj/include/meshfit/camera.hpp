#pragma once

#include <array>
#include <vector>

#include "meshfit/common.hpp"

namespace meshfit {

// Weak-perspective pose. The quaternion is stored raw (w, x, y, z) and
// renormalized inside every operation; gradients flow through the
// normalization so the pose can be optimized directly.
struct CameraPose {
  double scale = 1.0;
  double tx = 0.0, ty = 0.0;
  std::array<double, 4> quat = {1.0, 0.0, 0.0, 0.0};

  std::array<double, 7> packed() const {
    return {scale, tx, ty, quat[0], quat[1], quat[2], quat[3]};
  }
  static CameraPose from_packed(const std::array<double, 7>& p) {
    return {p[0], p[1], p[2], {p[3], p[4], p[5], p[6]}};
  }
};

std::array<double, 9> quat_to_matrix(const std::array<double, 4>& raw_quat);

// Hamilton product a*b (rotation b applied first).
std::array<double, 4> quat_multiply(const std::array<double, 4>& a,
                                    const std::array<double, 4>& b);
std::array<double, 4> quat_from_axis_angle(Vec3 axis, double radians);

std::vector<Vec3> quat_rotate(const std::array<double, 4>& raw_quat,
                              const std::vector<Vec3>& v);

// Projected point p = scale * (R v).xy + t in the normalized [-1,1] frame
// (x right, y up); depth = (R v).z, larger depth is closer to the viewer.
struct Projection {
  std::vector<Vec2> points;
  std::vector<double> depth;
  std::vector<Vec3> rotated;  // kept for the backward pass
};

Projection project_weak_perspective(const CameraPose& pose,
                                    const std::vector<Vec3>& v);

struct CameraGrads {
  double d_scale = 0.0;
  double d_tx = 0.0, d_ty = 0.0;
  std::array<double, 4> d_quat = {0.0, 0.0, 0.0, 0.0};

  std::array<double, 7> packed() const {
    return {d_scale, d_tx, d_ty, d_quat[0], d_quat[1], d_quat[2], d_quat[3]};
  }
};

// Backpropagates d(loss)/d(projected points) to the pose and the vertices.
// `grad_v` is accumulated (callers fold several loss terms into one buffer).
CameraGrads project_backward(const CameraPose& pose,
                             const std::vector<Vec3>& v,
                             const Projection& fwd,
                             const std::vector<Vec2>& grad_points,
                             std::vector<Vec3>* grad_v);

// Normalized-frame helpers shared by projection, masks, and point sets:
// pixel (row, col) of an R x R image maps to
//   x = (2*col + 1)/R - 1,  y = 1 - (2*row + 1)/R.
inline double pixel_center_x(int col, int res) {
  return (2.0 * col + 1.0) / res - 1.0;
}
inline double pixel_center_y(int row, int res) {
  return 1.0 - (2.0 * row + 1.0) / res;
}

}  // namespace meshfit
