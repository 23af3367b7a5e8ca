#include "linecalib/p3l.hpp"

#include <array>
#include <cmath>

#include <Eigen/SVD>

#include "linecalib/error.hpp"

namespace linecalib {

namespace {

constexpr double kDegenerateRatio = 1e-9;
constexpr double kMaxCondition = 1e6;

// Rotation whose first column is `first`.
Mat3 basis_with_first_column(const Vec3& first) {
  const Vec3 helper = std::abs(first.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 second = first.cross(helper).normalized();
  const Vec3 third = first.cross(second);
  Mat3 m;
  m.col(0) = first;
  m.col(1) = second;
  m.col(2) = third;
  return m;
}

// Unit-circle solutions (c, s) of p * c + q * s = 0, as an antipodal pair.
std::array<Vec2, 2> unit_circle_roots(double p, double q) {
  const Vec2 root = Vec2(q, -p).normalized();
  return {root, Vec2(-root)};
}

}  // namespace

void P3LProblem::validate() const {
  const Mat3& R = frame.rotation;
  for (const Line3D* lane : {&cloud_lane1, &cloud_lane2}) {
    if (std::abs((R * lane->direction).x()) < std::cos(deg2rad(2.0))) {
      throw Error(ErrorCode::kInvalidArgument, "cloud lane is not aligned with the ground frame x axis");
    }
  }
  if (std::abs((R * cloud_pole.direction).z()) < std::cos(deg2rad(15.0))) {
    throw Error(ErrorCode::kInvalidArgument, "cloud pole is not aligned with the ground frame z axis");
  }
}

std::vector<Extrinsic> solve_p3l(const P3LProblem& problem) {
  problem.validate();
  const Vec3 n1 = backproject_line(problem.intrinsics, problem.image_lane1);
  const Vec3 n2 = backproject_line(problem.intrinsics, problem.image_lane2);
  const Vec3 n3 = backproject_line(problem.intrinsics, problem.image_pole);

  Mat3 normals;
  normals.row(0) = n1.transpose();
  normals.row(1) = n2.transpose();
  normals.row(2) = n3.transpose();
  Eigen::JacobiSVD<Mat3> svd(normals, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(2) <= kDegenerateRatio * sv(0)) {
    throw Error(ErrorCode::kDegenerateNormals, "back-projected normals do not span 3D");
  }
  if (sv(0) / sv(2) > kMaxCondition) {
    throw Error(ErrorCode::kNoSolution, "translation system is ill-conditioned");
  }

  const Mat3 R_prime = basis_with_first_column(n3);
  const Vec3 a1 = R_prime.transpose() * n1;
  const Vec3 a2 = R_prime.transpose() * n2;
  // With w = (cos b, sin b cos a, sin b sin a) the lane constraints read
  // a_ix cos b + sin b (a_iy cos a + a_iz sin a) = 0; eliminating b:
  const double p = a1.x() * a2.y() - a2.x() * a1.y();
  const double q = a1.x() * a2.z() - a2.x() * a1.z();
  if (std::hypot(p, q) < 1e-12) {
    throw Error(ErrorCode::kDegenerateNormals, "lane normals leave the rotation undetermined");
  }

  const Vec3 pts[3] = {problem.frame.rotation * problem.cloud_lane1.point,
                       problem.frame.rotation * problem.cloud_lane2.point,
                       problem.frame.rotation * problem.cloud_pole.point};
  std::vector<Extrinsic> out;
  for (const Vec2& alpha : unit_circle_roots(p, q)) {
    const double k1 = a1.y() * alpha.x() + a1.z() * alpha.y();
    const double k2 = a2.y() * alpha.x() + a2.z() * alpha.y();
    // Use the better-conditioned lane equation for beta.
    const bool first = std::hypot(a1.x(), k1) >= std::hypot(a2.x(), k2);
    const double bx = first ? a1.x() : a2.x();
    const double bk = first ? k1 : k2;
    if (std::hypot(bx, bk) < 1e-12) continue;
    for (const Vec2& beta : unit_circle_roots(bx, bk)) {
      const Mat3 rot_alpha = rot_x(std::atan2(alpha.y(), alpha.x()));
      const Mat3 rot_beta = rot_z(std::atan2(beta.y(), beta.x()));
      const Mat3 R_gc = R_prime * rot_alpha * rot_beta;

      Vec3 rhs;
      for (int i = 0; i < 3; ++i) rhs(i) = -normals.row(i).dot(R_gc * pts[i]);
      const Vec3 t = svd.solve(rhs);

      bool in_front = true;
      for (const Vec3& p_g : pts) in_front = in_front && (R_gc * p_g + t).z() > kMinDepth;
      if (!in_front) continue;
      out.push_back(Extrinsic::from_rotation(R_gc * problem.frame.rotation, t));
    }
  }
  if (out.empty()) throw Error(ErrorCode::kNoSolution, "no candidate passes the cheirality check");
  return out;
}

}  // namespace linecalib
