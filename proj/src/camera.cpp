#include "meshfit/camera.hpp"

#include <cmath>

namespace meshfit {

namespace {

struct UnitQuat {
  std::array<double, 4> q;  // normalized
  double inv_norm;
};

UnitQuat normalize_quat(const std::array<double, 4>& raw) {
  double n = std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] +
                       raw[3] * raw[3]);
  if (!(n > 1e-8))
    throw NumericError("quaternion norm below 1e-8");
  double inv = 1.0 / n;
  return {{raw[0] * inv, raw[1] * inv, raw[2] * inv, raw[3] * inv}, inv};
}

std::array<double, 9> matrix_of_unit(const std::array<double, 4>& q) {
  double w = q[0], x = q[1], y = q[2], z = q[3];
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
          2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
}

inline Vec3 mat_apply(const std::array<double, 9>& m, Vec3 v) {
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
          m[3] * v.x + m[4] * v.y + m[5] * v.z,
          m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

inline Vec3 mat_apply_t(const std::array<double, 9>& m, Vec3 v) {
  return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
          m[1] * v.x + m[4] * v.y + m[7] * v.z,
          m[2] * v.x + m[5] * v.y + m[8] * v.z};
}

// d(loss)/d(unit quat) from the accumulated d(loss)/dR, using the entrywise
// derivatives of the rotation matrix of a unit quaternion.
std::array<double, 4> quat_grad_from_matrix(const std::array<double, 4>& q,
                                            const std::array<double, 9>& gr) {
  double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<double, 4> g{};
  // dR/dw
  g[0] = 2 * (-z * gr[1] + y * gr[2] + z * gr[3] - x * gr[5] - y * gr[6] +
              x * gr[7]);
  // dR/dx
  g[1] = 2 * (y * gr[1] + z * gr[2] + y * gr[3] - 2 * x * gr[4] - w * gr[5] +
              z * gr[6] + w * gr[7] - 2 * x * gr[8]);
  // dR/dy
  g[2] = 2 * (-2 * y * gr[0] + x * gr[1] + w * gr[2] + x * gr[3] + z * gr[5] -
              w * gr[6] + z * gr[7] - 2 * y * gr[8]);
  // dR/dz
  g[3] = 2 * (-2 * z * gr[0] - w * gr[1] + x * gr[2] + w * gr[3] - 2 * z * gr[4] +
              y * gr[5] + x * gr[6] + y * gr[7]);
  return g;
}

}  // namespace

std::array<double, 9> quat_to_matrix(const std::array<double, 4>& raw_quat) {
  return matrix_of_unit(normalize_quat(raw_quat).q);
}

std::array<double, 4> quat_multiply(const std::array<double, 4>& a,
                                    const std::array<double, 4>& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

std::array<double, 4> quat_from_axis_angle(Vec3 axis, double radians) {
  double n = norm(axis);
  if (!(n > 1e-12)) throw NumericError("quat_from_axis_angle: zero axis");
  double s = std::sin(radians / 2.0) / n;
  return {std::cos(radians / 2.0), s * axis.x, s * axis.y, s * axis.z};
}

std::vector<Vec3> quat_rotate(const std::array<double, 4>& raw_quat,
                              const std::vector<Vec3>& v) {
  auto m = quat_to_matrix(raw_quat);
  std::vector<Vec3> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = mat_apply(m, v[i]);
  return out;
}

Projection project_weak_perspective(const CameraPose& pose,
                                    const std::vector<Vec3>& v) {
  if (!(pose.scale > 0.0))
    throw NumericError("project_weak_perspective: scale must be positive");
  auto m = quat_to_matrix(pose.quat);
  Projection out;
  out.points.resize(v.size());
  out.depth.resize(v.size());
  out.rotated.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    Vec3 r = mat_apply(m, v[i]);
    out.rotated[i] = r;
    out.points[i] = {pose.scale * r.x + pose.tx, pose.scale * r.y + pose.ty};
    out.depth[i] = r.z;
  }
  return out;
}

CameraGrads project_backward(const CameraPose& pose,
                             const std::vector<Vec3>& v,
                             const Projection& fwd,
                             const std::vector<Vec2>& grad_points,
                             std::vector<Vec3>* grad_v) {
  UnitQuat uq = normalize_quat(pose.quat);
  auto m = matrix_of_unit(uq.q);

  CameraGrads grads;
  std::array<double, 9> grad_r{};  // d(loss)/dR accumulated over vertices
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& gp = grad_points[i];
    const Vec3& rot = fwd.rotated[i];
    grads.d_scale += gp.x * rot.x + gp.y * rot.y;
    grads.d_tx += gp.x;
    grads.d_ty += gp.y;
    Vec3 g_rot{pose.scale * gp.x, pose.scale * gp.y, 0.0};
    if (grad_v) (*grad_v)[i] += mat_apply_t(m, g_rot);
    grad_r[0] += g_rot.x * v[i].x;
    grad_r[1] += g_rot.x * v[i].y;
    grad_r[2] += g_rot.x * v[i].z;
    grad_r[3] += g_rot.y * v[i].x;
    grad_r[4] += g_rot.y * v[i].y;
    grad_r[5] += g_rot.y * v[i].z;
    // g_rot.z is always zero: depth is not a differentiable output.
  }

  std::array<double, 4> g_unit = quat_grad_from_matrix(uq.q, grad_r);
  // Through the normalization q_unit = q/|q|.
  double proj = g_unit[0] * uq.q[0] + g_unit[1] * uq.q[1] +
                g_unit[2] * uq.q[2] + g_unit[3] * uq.q[3];
  for (int k = 0; k < 4; ++k)
    grads.d_quat[k] = (g_unit[k] - proj * uq.q[k]) * uq.inv_norm;
  return grads;
}

}  // namespace meshfit
