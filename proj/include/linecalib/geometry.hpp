#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace linecalib {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Frame conventions:
//   LiDAR  L: X forward, Y left, Z up.
//   Camera C: X right, Y down, Z forward (rectified pinhole).
// An Extrinsic maps LiDAR points into the camera frame: p_C = R(r) p_L + t.

/// Rotation matrix of an angle-axis vector (Rodrigues). Zero maps to identity.
Mat3 angle_axis_to_matrix(const Vec3& r);

/// Inverse of angle_axis_to_matrix with the angle in [0, pi].
/// At exactly pi the axis sign is fixed so that its first non-zero component is positive.
/// Throws Error(kNotARotation) when R is not orthonormal within 1e-6 or det != +1.
Vec3 matrix_to_angle_axis(const Mat3& R);

/// True when R^T R = I and det R = 1 within tol.
bool is_rotation(const Mat3& R, double tol = 1e-6);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// Maps an angle-axis vector to the equivalent one with norm in [0, pi].
Vec3 canonical_angle_axis(const Vec3& r);

struct Extrinsic {
  Vec3 r = Vec3::Zero();
  Vec3 t = Vec3::Zero();

  static Extrinsic identity() { return {}; }
  static Extrinsic from_rotation(const Mat3& R, const Vec3& t);

  Mat3 rotation() const { return angle_axis_to_matrix(r); }
  Extrinsic inverse() const;
  /// 3x4 [R | t].
  Eigen::Matrix<double, 3, 4> matrix() const;
};

/// (a * b) applies b first, then a.
Extrinsic compose(const Extrinsic& a, const Extrinsic& b);

Vec3 transform_point(const Extrinsic& e, const Vec3& p);

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws Error(kInvalidArgument) on non-positive focal lengths or a
  /// principal point outside the image.
  void validate() const;
  Mat3 matrix() const;
};

inline constexpr double kMinDepth = 1e-6;

/// Pinhole projection; std::nullopt when the point is not in front of the
/// camera (z <= kMinDepth).
std::optional<Vec2> project(const Intrinsics& k, const Vec3& p_cam);

/// Image line a*u + b*v + c = 0 with a^2 + b^2 = 1.
/// Sign is canonical: the normal angle theta = atan2(b, a) lies in [0, pi),
/// so two Line2D describing the same line compare equal.
struct Line2D {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;

  /// Throws Error(kInvalidArgument) when (a, b) == (0, 0).
  static Line2D from_coefficients(double a, double b, double c);
  static Line2D through(const Vec2& p, const Vec2& q);
  static Line2D from_theta_rho(double theta, double rho);

  double theta() const;
  double rho() const { return -c; }
  double signed_distance(const Vec2& q) const { return a * q.x() + b * q.y() + c; }
  Vec3 coefficients() const { return {a, b, c}; }
};

/// Total-least-squares line through a set of 2D points (at least 2, not all coincident).
Line2D fit_line2d(const std::vector<Vec2>& points);

struct Line3D {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();

  /// Normalizes the direction; throws Error(kInvalidArgument) on a zero direction.
  static Line3D make(const Vec3& point, const Vec3& direction);

  double distance(const Vec3& p) const;
  Vec3 closest_point(const Vec3& p) const;
};

struct Plane3D {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
};

/// Unit normal of the plane through the camera centre that contains every
/// ray projecting onto l: normalize(K^T l).
Vec3 backproject_line(const Intrinsics& k, const Line2D& l);

/// Geodesic distance ||log(R1 R2^T)|| in [0, pi]. Throws kNotARotation.
double rotation_geodesic(const Mat3& R1, const Mat3& R2);

struct EulerZyx {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Decomposes R = Rz(yaw) Ry(pitch) Rx(roll). In gimbal lock roll is set to 0.
EulerZyx euler_zyx(const Mat3& R);
Mat3 from_euler_zyx(const EulerZyx& e);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace linecalib
