#include "radarego/geometry.hpp"

#include <algorithm>
#include <stdexcept>

#include "radarego/errors.hpp"

namespace radarego {

RotMat3 RotMat3::operator*(const RotMat3& o) const {
  RotMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
    }
  return r;
}

RotMat3 RotMat3::transposed() const {
  RotMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
  return r;
}

double RotMat3::determinant() const {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double RotMat3::orthonormality_error() const {
  const RotMat3 rtr = transposed() * (*this);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double target = (i == j) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(rtr.m[i][j] - target));
    }
  return worst;
}

bool RotMat3::is_valid(double tol) const {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!std::isfinite(m[i][j])) return false;
  return orthonormality_error() < tol && std::abs(determinant() - 1.0) < tol;
}

RotMat3 euler_to_rotmat(const EulerAngles& e) {
  if (!(std::isfinite(e.roll) && std::isfinite(e.pitch) && std::isfinite(e.yaw)))
    throw std::invalid_argument("euler_to_rotmat: non-finite angle");
  const double cr = std::cos(e.roll), sr = std::sin(e.roll);
  const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
  const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
  // R = Rz(yaw) * Ry(pitch) * Rx(roll)
  RotMat3 r;
  r.m[0][0] = cy * cp;
  r.m[0][1] = cy * sp * sr - sy * cr;
  r.m[0][2] = cy * sp * cr + sy * sr;
  r.m[1][0] = sy * cp;
  r.m[1][1] = sy * sp * sr + cy * cr;
  r.m[1][2] = sy * sp * cr - cy * sr;
  r.m[2][0] = -sp;
  r.m[2][1] = cp * sr;
  r.m[2][2] = cp * cr;
  return r;
}

EulerAngles rotmat_to_euler(const RotMat3& R, bool* gimbal_lock) {
  const double sp = std::clamp(-R.m[2][0], -1.0, 1.0);
  const double pitch = std::asin(sp);
  const bool locked = std::abs(pitch) > M_PI_2 - 1e-9;
  if (gimbal_lock) *gimbal_lock = locked;
  if (locked) {
    // cos(pitch) ~ 0: only (yaw - sign(sp)*roll) is observable. Fold into yaw.
    return {0.0, pitch, std::atan2(-R.m[0][1], R.m[1][1])};
  }
  return {std::atan2(R.m[2][1], R.m[2][2]), pitch, std::atan2(R.m[1][0], R.m[0][0])};
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

PoseSE3 inverse(const PoseSE3& p) {
  const RotMat3 rt = p.rotation.transposed();
  return {rt, -(rt * p.translation)};
}

RelativePose relative_between(const PoseSE3& a, const PoseSE3& b, bool* gimbal_lock) {
  const PoseSE3 rel = compose(inverse(a), b);
  return {rel.translation, rotmat_to_euler(rel.rotation, gimbal_lock)};
}

PoseSE3 to_pose(const RelativePose& rel) {
  return {euler_to_rotmat(rel.r), rel.t};
}

Vec3 transform_point(const PoseSE3& p, const Vec3& pt) {
  return p.rotation * pt + p.translation;
}

std::vector<Vec3> transform_points(const PoseSE3& p, std::span<const Vec3> pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& pt : pts) out.push_back(transform_point(p, pt));
  return out;
}

RotMat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) return RotMat3::identity();
  const Vec3 axis = omega * (1.0 / theta);
  const double c = std::cos(theta), s = std::sin(theta), t = 1.0 - c;
  RotMat3 r;
  r.m[0][0] = t * axis.x * axis.x + c;
  r.m[0][1] = t * axis.x * axis.y - s * axis.z;
  r.m[0][2] = t * axis.x * axis.z + s * axis.y;
  r.m[1][0] = t * axis.x * axis.y + s * axis.z;
  r.m[1][1] = t * axis.y * axis.y + c;
  r.m[1][2] = t * axis.y * axis.z - s * axis.x;
  r.m[2][0] = t * axis.x * axis.z - s * axis.y;
  r.m[2][1] = t * axis.y * axis.z + s * axis.x;
  r.m[2][2] = t * axis.z * axis.z + c;
  return r;
}

Vec3 so3_log(const RotMat3& R) {
  const double trace = R.m[0][0] + R.m[1][1] + R.m[2][2];
  const double c = std::clamp((trace - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta < 1e-12) return {0, 0, 0};
  if (theta > M_PI - 1e-6) {
    // Near pi the antisymmetric part vanishes; recover the axis from the
    // diagonal of (R + I)/2.
    Vec3 axis{std::sqrt(std::max(0.0, (R.m[0][0] + 1.0) * 0.5)),
              std::sqrt(std::max(0.0, (R.m[1][1] + 1.0) * 0.5)),
              std::sqrt(std::max(0.0, (R.m[2][2] + 1.0) * 0.5))};
    // Fix signs using the largest component.
    if (axis.x >= axis.y && axis.x >= axis.z) {
      if (R.m[2][1] - R.m[1][2] < 0) axis.x = -axis.x;
      axis.y = (R.m[0][1] + R.m[1][0]) / (4.0 * axis.x) * 2.0;
      axis.z = (R.m[0][2] + R.m[2][0]) / (4.0 * axis.x) * 2.0;
    } else if (axis.y >= axis.x && axis.y >= axis.z) {
      if (R.m[0][2] - R.m[2][0] < 0) axis.y = -axis.y;
      axis.x = (R.m[0][1] + R.m[1][0]) / (4.0 * axis.y) * 2.0;
      axis.z = (R.m[1][2] + R.m[2][1]) / (4.0 * axis.y) * 2.0;
    } else {
      if (R.m[1][0] - R.m[0][1] < 0) axis.z = -axis.z;
      axis.x = (R.m[0][2] + R.m[2][0]) / (4.0 * axis.z) * 2.0;
      axis.y = (R.m[1][2] + R.m[2][1]) / (4.0 * axis.z) * 2.0;
    }
    const double n = axis.norm();
    return axis * (theta / (n > 0 ? n : 1.0));
  }
  const double k = theta / (2.0 * std::sin(theta));
  return {k * (R.m[2][1] - R.m[1][2]), k * (R.m[0][2] - R.m[2][0]),
          k * (R.m[1][0] - R.m[0][1])};
}

RotMat3 slerp(const RotMat3& a, const RotMat3& b, double u) {
  const Vec3 delta = so3_log(a.transposed() * b);
  return a * so3_exp(delta * u);
}

Quat rotmat_to_quat(const RotMat3& R) {
  // Shepperd's method: pick the largest of the four squared components.
  const double trace = R.m[0][0] + R.m[1][1] + R.m[2][2];
  Quat q;
  if (trace > 0.0) {
    double s = std::sqrt(trace + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (R.m[2][1] - R.m[1][2]) / s;
    q.y = (R.m[0][2] - R.m[2][0]) / s;
    q.z = (R.m[1][0] - R.m[0][1]) / s;
  } else if (R.m[0][0] > R.m[1][1] && R.m[0][0] > R.m[2][2]) {
    double s = std::sqrt(1.0 + R.m[0][0] - R.m[1][1] - R.m[2][2]) * 2.0;
    q.w = (R.m[2][1] - R.m[1][2]) / s;
    q.x = 0.25 * s;
    q.y = (R.m[0][1] + R.m[1][0]) / s;
    q.z = (R.m[0][2] + R.m[2][0]) / s;
  } else if (R.m[1][1] > R.m[2][2]) {
    double s = std::sqrt(1.0 + R.m[1][1] - R.m[0][0] - R.m[2][2]) * 2.0;
    q.w = (R.m[0][2] - R.m[2][0]) / s;
    q.x = (R.m[0][1] + R.m[1][0]) / s;
    q.y = 0.25 * s;
    q.z = (R.m[1][2] + R.m[2][1]) / s;
  } else {
    double s = std::sqrt(1.0 + R.m[2][2] - R.m[0][0] - R.m[1][1]) * 2.0;
    q.w = (R.m[1][0] - R.m[0][1]) / s;
    q.x = (R.m[0][2] + R.m[2][0]) / s;
    q.y = (R.m[1][2] + R.m[2][1]) / s;
    q.z = 0.25 * s;
  }
  if (q.w < 0) {
    q.x = -q.x; q.y = -q.y; q.z = -q.z; q.w = -q.w;
  }
  return q;
}

RotMat3 quat_to_rotmat(const Quat& q_in) {
  const double n = std::sqrt(q_in.x * q_in.x + q_in.y * q_in.y +
                             q_in.z * q_in.z + q_in.w * q_in.w);
  if (!(n > 0.0) || !std::isfinite(n))
    throw numeric_error("quat_to_rotmat: quaternion has zero or non-finite norm");
  const double x = q_in.x / n, y = q_in.y / n, z = q_in.z / n, w = q_in.w / n;
  RotMat3 r;
  r.m[0][0] = 1 - 2 * (y * y + z * z);
  r.m[0][1] = 2 * (x * y - z * w);
  r.m[0][2] = 2 * (x * z + y * w);
  r.m[1][0] = 2 * (x * y + z * w);
  r.m[1][1] = 1 - 2 * (x * x + z * z);
  r.m[1][2] = 2 * (y * z - x * w);
  r.m[2][0] = 2 * (x * z - y * w);
  r.m[2][1] = 2 * (y * z + x * w);
  r.m[2][2] = 1 - 2 * (x * x + y * y);
  return r;
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

}  // namespace radarego
