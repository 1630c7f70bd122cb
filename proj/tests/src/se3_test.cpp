#include <cmath>
#include <random>

#include "doctest.h"
#include "topowarp/se3.hpp"

using namespace topowarp;

namespace {

// Hand-rolled z*y*x product, written out entry by entry so it cannot share
// a bug with the implementation.
Mat3 zyx_reference(double ax, double ay, double az) {
  const double cx = std::cos(ax), sx = std::sin(ax);
  const double cy = std::cos(ay), sy = std::sin(ay);
  const double cz = std::cos(az), sz = std::sin(az);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return rz * ry * rx;
}

}  // namespace

TEST_CASE("euler transform matches the explicit rotation product") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  for (int t = 0; t < 50; ++t) {
    EulerParams6 p;
    p.angles = {u(gen), u(gen), u(gen)};
    p.offsets = {u(gen), u(gen), u(gen)};
    const RigidTransform tf = euler_to_transform(p);
    CHECK((tf.R - zyx_reference(p.angles.x(), p.angles.y(), p.angles.z())).cwiseAbs().maxCoeff() <=
          1e-14);
    CHECK(tf.t == p.offsets);
    CHECK(tf.is_valid(1e-12));
  }
}

TEST_CASE("euler extraction round-trips away from the pitch singularity") {
  std::mt19937_64 gen(18);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int t = 0; t < 50; ++t) {
    EulerParams6 p;
    p.angles = {u(gen), u(gen) * (1.25 / 1.2), u(gen)};
    p.offsets = {u(gen), u(gen), u(gen)};
    const EulerParams6 back = transform_to_euler(euler_to_transform(p));
    CHECK((back.angles - p.angles).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.offsets - p.offsets).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("euler extraction rejects gimbal lock") {
  EulerParams6 p;
  p.angles = {0.3, M_PI / 2.0 - 1e-4, -0.2};
  CHECK_THROWS_WITH_AS(transform_to_euler(euler_to_transform(p)),
                       "euler extraction near singularity", std::invalid_argument);
}

TEST_CASE("analytic rotation derivatives match finite differences") {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    const Vec3 angles{u(gen), u(gen), u(gen)};
    Mat3 dr[3];
    rotation_derivatives(angles, dr);
    for (int a = 0; a < 3; ++a) {
      Vec3 hi = angles, lo = angles;
      hi[a] += h;
      lo[a] -= h;
      const Mat3 fd = (zyx_reference(hi.x(), hi.y(), hi.z()) -
                       zyx_reference(lo.x(), lo.y(), lo.z())) /
                      (2.0 * h);
      CHECK((dr[a] - fd).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("rotation angle of known rotations") {
  EulerParams6 p;
  p.angles = {0.25, 0.0, 0.0};
  CHECK(rotation_angle(euler_to_transform(p).R) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rotation_angle(Mat3::Identity()) == 0.0);
}

TEST_CASE("polar projection returns the nearest proper rotation") {
  std::mt19937_64 gen(20);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Mat3 base = zyx_reference(u(gen), u(gen), u(gen));
    Mat3 noisy = base;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) noisy(r, c) += 0.05 * u(gen);
    }
    const Mat3 proj = project_to_rotation(noisy);
    CHECK((proj.transpose() * proj - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(proj.determinant() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((proj - base).cwiseAbs().maxCoeff() <= 0.2);
  }
  // A reflection still projects onto a proper rotation.
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  const Mat3 fixed = project_to_rotation(reflect);
  CHECK(fixed.determinant() == doctest::Approx(1.0).epsilon(1e-10));
}
