#include "linecalib/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "linecalib/error.hpp"

namespace linecalib {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 k;
  k << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return k;
}

// First non-negligible component positive.
Vec3 canonical_sign(const Vec3& axis) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > 1e-12) return axis[i] > 0.0 ? axis : Vec3(-axis);
  }
  return axis;
}

}  // namespace

Mat3 angle_axis_to_matrix(const Vec3& r) {
  const double theta2 = r.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;
  double b;
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = skew(r);
  return Mat3::Identity() + a * k + b * k * k;
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Vec3 matrix_to_angle_axis(const Mat3& R) {
  if (!is_rotation(R)) throw Error(ErrorCode::kNotARotation, "matrix is not a rotation");
  const Vec3 w(0.5 * (R(2, 1) - R(1, 2)), 0.5 * (R(0, 2) - R(2, 0)), 0.5 * (R(1, 0) - R(0, 1)));
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double s = w.norm();
  const double theta = std::atan2(s, c);

  if (c > 0.0) {
    // theta < pi/2: w = sin(theta) * axis is well conditioned.
    const double scale = s < 1e-12 ? 1.0 : theta / s;
    return w * scale;
  }

  // Near pi use the symmetric part: (R + R^T)/2 - c I = (1 - c) a a^T.
  const Mat3 sym = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
  int k = 0;
  sym.diagonal().maxCoeff(&k);
  Vec3 axis = sym.col(k).normalized();
  if (s > 1e-12) {
    if (axis.dot(w) < 0.0) axis = -axis;
  } else {
    axis = canonical_sign(axis);
  }
  return axis * theta;
}

Mat3 rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Vec3 canonical_angle_axis(const Vec3& r) {
  const double theta = r.norm();
  if (theta <= kPi) return r;
  Vec3 axis = r / theta;
  double reduced = std::fmod(theta, 2.0 * kPi);
  if (reduced > kPi) {
    axis = -axis;
    reduced = 2.0 * kPi - reduced;
  }
  if (reduced == kPi) axis = canonical_sign(axis);
  return axis * reduced;
}

Extrinsic Extrinsic::from_rotation(const Mat3& R, const Vec3& t) {
  return Extrinsic{matrix_to_angle_axis(R), t};
}

Extrinsic Extrinsic::inverse() const {
  const Mat3 Rt = rotation().transpose();
  return Extrinsic{canonical_angle_axis(-r), -(Rt * t)};
}

Eigen::Matrix<double, 3, 4> Extrinsic::matrix() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation();
  m.col(3) = t;
  return m;
}

Extrinsic compose(const Extrinsic& a, const Extrinsic& b) {
  const Mat3 Ra = a.rotation();
  return Extrinsic::from_rotation(Ra * b.rotation(), Ra * b.t + a.t);
}

Vec3 transform_point(const Extrinsic& e, const Vec3& p) { return e.rotation() * p + e.t; }

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

std::optional<Vec2> project(const Intrinsics& k, const Vec3& p) {
  if (!(p.z() > kMinDepth)) return std::nullopt;
  return Vec2(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
}

Line2D Line2D::from_coefficients(double a, double b, double c) {
  const double n = std::hypot(a, b);
  if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(c)) {
    throw Error(ErrorCode::kInvalidArgument, "degenerate line coefficients");
  }
  a /= n;
  b /= n;
  c /= n;
  if (b < 0.0 || (b == 0.0 && a < 0.0)) {
    a = -a;
    b = -b;
    c = -c;
  }
  return Line2D{a, b, c};
}

Line2D Line2D::through(const Vec2& p, const Vec2& q) {
  const Vec3 l = Vec3(p.x(), p.y(), 1.0).cross(Vec3(q.x(), q.y(), 1.0));
  return from_coefficients(l.x(), l.y(), l.z());
}

Line2D Line2D::from_theta_rho(double theta, double rho) {
  return from_coefficients(std::cos(theta), std::sin(theta), -rho);
}

double Line2D::theta() const { return std::atan2(b, a); }

Line2D fit_line2d(const std::vector<Vec2>& points) {
  if (points.size() < 2) throw Error(ErrorCode::kInvalidArgument, "line fit needs >= 2 points");
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Vec2 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  if (eig.eigenvalues()(1) <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "line fit on coincident points");
  }
  const Vec2 normal = eig.eigenvectors().col(0);
  return Line2D::from_coefficients(normal.x(), normal.y(), -normal.dot(centroid));
}

Line3D Line3D::make(const Vec3& point, const Vec3& direction) {
  const double n = direction.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zero line direction");
  return Line3D{point, direction / n};
}

double Line3D::distance(const Vec3& p) const { return (p - point).cross(direction).norm(); }

Vec3 Line3D::closest_point(const Vec3& p) const {
  return point + direction * direction.dot(p - point);
}

Vec3 backproject_line(const Intrinsics& k, const Line2D& l) {
  const Vec3 n(k.fx * l.a, k.fy * l.b, k.cx * l.a + k.cy * l.b + l.c);
  return n.normalized();
}

double rotation_geodesic(const Mat3& R1, const Mat3& R2) {
  if (!is_rotation(R1) || !is_rotation(R2)) {
    throw Error(ErrorCode::kNotARotation, "geodesic of a non-rotation");
  }
  const Mat3 rel = R1 * R2.transpose();
  const Vec3 w(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  return std::atan2(0.5 * w.norm(), c);
}

EulerZyx euler_zyx(const Mat3& R) {
  EulerZyx e;
  const double cos_pitch = std::hypot(R(0, 0), R(1, 0));
  e.pitch = std::atan2(-R(2, 0), cos_pitch);
  if (cos_pitch < 1e-9) {
    e.roll = 0.0;
    e.yaw = std::atan2(-R(0, 1), R(1, 1));
  } else {
    e.roll = std::atan2(R(2, 1), R(2, 2));
    e.yaw = std::atan2(R(1, 0), R(0, 0));
  }
  return e;
}

Mat3 from_euler_zyx(const EulerZyx& e) { return rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll); }

}  // namespace linecalib
