#include "topowarp/se3.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace topowarp {

namespace {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return R;
}

Mat3 rot_y(double b) {
  const double c = std::cos(b), s = std::sin(b);
  Mat3 R;
  R << c, 0, s,
       0, 1, 0,
      -s, 0, c;
  return R;
}

Mat3 rot_z(double g) {
  const double c = std::cos(g), s = std::sin(g);
  Mat3 R;
  R << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return R;
}

}  // namespace

RigidTransform euler_to_transform(const EulerParams6& p) {
  RigidTransform T;
  T.R = rot_z(p.angles.z()) * rot_y(p.angles.y()) * rot_x(p.angles.x());
  T.t = p.offsets;
  return T;
}

EulerParams6 transform_to_euler(const RigidTransform& T) {
  // R = Rz*Ry*Rx has R(2,0) = -sin(pitch).
  const double sp = std::clamp(-T.R(2, 0), -1.0, 1.0);
  const double pitch = std::asin(sp);
  if (std::abs(pitch) > std::numbers::pi / 2.0 - 1e-3) {
    throw std::invalid_argument("euler extraction near singularity");
  }
  EulerParams6 p;
  p.angles.x() = std::atan2(T.R(2, 1), T.R(2, 2));
  p.angles.y() = pitch;
  p.angles.z() = std::atan2(T.R(1, 0), T.R(0, 0));
  p.offsets = T.t;
  return p;
}

void rotation_derivatives(const Vec3& angles, Mat3 dR[3]) {
  const double ca = std::cos(angles.x()), sa = std::sin(angles.x());
  const double cb = std::cos(angles.y()), sb = std::sin(angles.y());
  const double cg = std::cos(angles.z()), sg = std::sin(angles.z());

  Mat3 Rx = rot_x(angles.x()), Ry = rot_y(angles.y()), Rz = rot_z(angles.z());

  Mat3 dRx, dRy, dRz;
  dRx << 0, 0, 0,
         0, -sa, -ca,
         0, ca, -sa;
  dRy << -sb, 0, cb,
         0, 0, 0,
         -cb, 0, -sb;
  dRz << -sg, -cg, 0,
         cg, -sg, 0,
         0, 0, 0;

  dR[0] = Rz * Ry * dRx;
  dR[1] = Rz * dRy * Rx;
  dR[2] = dRz * Ry * Rx;
}

double rotation_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

Mat3 project_to_rotation(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    R = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return R;
}

}  // namespace topowarp
