#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace topowarp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid body transform y = R*x + t.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& x) const { return R * x + t; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.R = R.transpose();
    inv.t = -(inv.R * t);
    return inv;
  }

  // this ∘ other, i.e. apply `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.R = R * other.R;
    out.t = R * other.t + t;
    return out;
  }

  // Orthonormality / handedness check used by tests and debug assertions.
  bool is_valid(double tol = 1e-9) const {
    return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           R.determinant() > 0.0;
  }
};

// Six local deformation parameters: three Euler angles and a translation
// offset. Only meaningful as small increments from identity; the solver
// re-linearizes around identity at every outer iteration.
struct EulerParams6 {
  Vec3 angles = Vec3::Zero();   // (x, y, z) rotation angles [rad]
  Vec3 offsets = Vec3::Zero();  // translation [m]

  static EulerParams6 zero() { return {}; }

  Eigen::Matrix<double, 6, 1> as_vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << angles, offsets;
    return v;
  }
  static EulerParams6 from_vector(const Eigen::Matrix<double, 6, 1>& v) {
    EulerParams6 p;
    p.angles = v.head<3>();
    p.offsets = v.tail<3>();
    return p;
  }
};

// Sparse feature anchored on (near) a cloud point. Descriptors are opaque
// fixed-length vectors; all keypoints of one cloud must agree on the length.
struct Keypoint {
  Vec3 position = Vec3::Zero();
  Eigen::VectorXd descriptor;
};

// Point cloud with per-point unit normals and RGB colors in [0,1].
// A zero normal marks a point whose normal could not be estimated
// (degenerate neighborhood); such points are skipped by consumers that
// need orientation.
struct OrientedPointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<Vec3> colors;
  std::vector<Keypoint> keypoints;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  // Throws std::invalid_argument on size mismatch, non-finite values,
  // non-unit (and non-zero) normals, or out-of-range colors.
  void validate() const;
};

bool is_valid_normal(const Vec3& n);

}  // namespace topowarp
