#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace radarego {

// Rigid-body pose algebra. Conventions used throughout:
//  - Euler angles are intrinsic Z-Y-X (yaw, then pitch, then roll).
//  - Poses map body-frame coordinates into the world frame: x_w = R x_b + t.
//  - Relative poses between frames a and b are expressed in the earlier
//    body frame: rel = inverse(a) * b.
// All types are immutable values; every operation is pure.

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Intrinsic Z-Y-X angles, radians. Canonical pitch lies in [-pi/2, pi/2].
struct EulerAngles {
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
};

/// Row-major 3x3 rotation matrix. Valid instances are orthonormal with
/// determinant +1 to within 1e-9.
struct RotMat3 {
  double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  static RotMat3 identity() { return {}; }

  double at(int r, int c) const { return m[r][c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  RotMat3 operator*(const RotMat3& o) const;
  RotMat3 transposed() const;
  double determinant() const;

  /// Largest absolute entry of R^T R - I.
  double orthonormality_error() const;
  bool is_valid(double tol = 1e-9) const;
};

struct PoseSE3 {
  RotMat3 rotation;
  Vec3 translation;

  static PoseSE3 identity() { return {}; }
};

/// 6-DoF egomotion between consecutive frames: translation plus Euler
/// rotation, both expressed in the earlier body frame.
struct RelativePose {
  Vec3 t;
  EulerAngles r;
};

/// Unit quaternion, w-last component order matching the trajectory
/// file layout.
struct Quat {
  double x = 0.0, y = 0.0, z = 0.0, w = 1.0;
};

RotMat3 euler_to_rotmat(const EulerAngles& e);

/// Inverse of euler_to_rotmat. At |pitch| = pi/2 the decomposition is
/// singular: roll is set to 0, the residual ambiguity folds into yaw, and
/// *gimbal_lock (when non-null) is set.
EulerAngles rotmat_to_euler(const RotMat3& R, bool* gimbal_lock = nullptr);

/// World-frame composition: the result applies b first, then a.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 inverse(const PoseSE3& p);

/// Egomotion from frame a to frame b, expressed in a's body frame.
/// compose(a, to_pose(result)) == b.
RelativePose relative_between(const PoseSE3& a, const PoseSE3& b,
                              bool* gimbal_lock = nullptr);

/// SE(3) form of a relative pose.
PoseSE3 to_pose(const RelativePose& rel);

Vec3 transform_point(const PoseSE3& p, const Vec3& pt);
std::vector<Vec3> transform_points(const PoseSE3& p, std::span<const Vec3> pts);

/// Rodrigues exponential: rotation vector (axis * angle) to matrix.
RotMat3 so3_exp(const Vec3& omega);
/// Logarithm: rotation matrix to rotation vector. Angle lies in [0, pi].
Vec3 so3_log(const RotMat3& R);

/// Geodesic interpolation between rotations, u in [0, 1].
RotMat3 slerp(const RotMat3& a, const RotMat3& b, double u);

Quat rotmat_to_quat(const RotMat3& R);
RotMat3 quat_to_rotmat(const Quat& q);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace radarego
