#pragma once

#include "topowarp/point_cloud.hpp"

namespace topowarp {

// Convention throughout: intrinsic x-y-z (roll, pitch, yaw) composed as
// R = Rz(yaw) * Ry(pitch) * Rx(roll). Angles in radians.
RigidTransform euler_to_transform(const EulerParams6& p);

// Inverse of euler_to_transform. Throws std::invalid_argument when
// |pitch| is within 1e-3 of pi/2 (gimbal lock makes roll/yaw ambiguous).
EulerParams6 transform_to_euler(const RigidTransform& T);

// Partial derivatives dR/d(angle_k) at the given angles, k in {0,1,2}
// for the x/y/z angle respectively. Used by the solver's analytic Jacobian.
void rotation_derivatives(const Vec3& angles, Mat3 dR[3]);

// Rotation angle in [0, pi] of a rotation matrix (trace formula, clamped).
double rotation_angle(const Mat3& R);

// Nearest rotation matrix in Frobenius norm (SVD sign-corrected polar factor).
Mat3 project_to_rotation(const Mat3& M);

}  // namespace topowarp
