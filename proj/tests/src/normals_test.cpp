#include <random>

#include "doctest.h"
#include "topowarp/normals.hpp"

using namespace topowarp;

TEST_CASE("plane samples recover the plane normal") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Vec3 n{u(gen), u(gen), u(gen)};
    while (n.norm() < 1e-3) n = {u(gen), u(gen), u(gen)};
    n.normalize();
    // Orthonormal in-plane frame.
    Vec3 a = n.cross(std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).normalized();
    const Vec3 b = n.cross(a);
    const Vec3 origin{u(gen), u(gen), u(gen) + 3.0};

    std::vector<Vec3> pts;
    for (int i = -5; i <= 5; ++i) {
      for (int j = -5; j <= 5; ++j) {
        pts.push_back(origin + 0.01 * i * a + 0.01 * j * b);
      }
    }
    const Vec3 viewpoint = Vec3::Zero();
    const auto normals = estimate_normals(pts, NormalEstimationParams{}, viewpoint);
    REQUIRE(normals.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(std::abs(std::abs(normals[i].dot(n)) - 1.0) <= 1e-9);
      // Oriented to face the viewpoint.
      CHECK(normals[i].dot(viewpoint - pts[i]) >= 0.0);
    }
  }
}

TEST_CASE("degenerate neighborhoods yield the zero-normal sentinel") {
  std::vector<Vec3> line;
  for (int i = 0; i < 20; ++i) line.push_back({0.01 * i, 0.0, 1.0});
  const auto normals = estimate_normals(line, NormalEstimationParams{}, Vec3::Zero());
  for (const auto& n : normals) {
    CHECK(!is_valid_normal(n));
  }
}

TEST_CASE("radius neighborhoods agree with knn on a dense plane") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < 15; ++j) pts.push_back({0.01 * i, 0.01 * j, 2.0});
  }
  NormalEstimationParams knn_params;  // k = 30
  NormalEstimationParams radius_params;
  radius_params.radius = 0.03;
  const auto a = estimate_normals(pts, knn_params, Vec3::Zero());
  const auto b = estimate_normals(pts, radius_params, Vec3::Zero());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK((a[i] - b[i]).norm() <= 1e-9);  // both are -z up to fp noise
  }
}
