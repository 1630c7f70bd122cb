#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "topowarp/solver.hpp"

using namespace topowarp;

namespace {

// Planar grid, normals +z, matched against a rigidly moved copy of itself.
struct Fixture {
  OrientedPointCloud source;
  OrientedPointCloud target;
  DeformationGraph graph;
  CorrespondenceSet corr;
};

Fixture make_fixture(const RigidTransform& tf, int n_side = 8, double spacing = 0.025) {
  Fixture f;
  for (int iy = 0; iy < n_side; ++iy) {
    for (int ix = 0; ix < n_side; ++ix) {
      f.source.points.push_back({ix * spacing, iy * spacing, 0.05 * std::sin(0.7 * ix + iy)});
      f.source.normals.push_back(Vec3::UnitZ());
      f.source.colors.push_back(Vec3(0.5, 0.5, 0.5));
    }
  }
  f.target = f.source;
  for (std::size_t i = 0; i < f.target.size(); ++i) {
    f.target.points[i] = tf.apply(f.source.points[i]);
    f.target.normals[i] = (tf.R * f.source.normals[i]).normalized();
  }
  f.graph = build_graph(f.source.points, 0.05);
  for (int i = 0; i < static_cast<int>(f.source.size()); ++i) {
    f.corr.dense.push_back({i, i});
  }
  return f;
}

RigidTransform small_motion() {
  EulerParams6 p;
  p.angles = {0.05, -0.08, 0.1};
  p.offsets = {0.01, -0.02, 0.015};
  return euler_to_transform(p);
}

Eigen::VectorXd random_theta(int n, std::mt19937_64& gen, double stddev) {
  std::normal_distribution<double> d(0.0, stddev);
  Eigen::VectorXd theta(n);
  for (int i = 0; i < n; ++i) theta(i) = d(gen);
  return theta;
}

// Directed nearest-neighbor regularization edges, recomputed by brute force.
std::vector<RegEdge> oracle_edges(const DeformationGraph& g, int reg_k) {
  const int n = static_cast<int>(g.size());
  const int k = std::min(reg_k, n - 1);
  std::vector<RegEdge> edges;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      order.push_back({(g.nodes[i] - g.nodes[j]).norm(), j});
    }
    std::sort(order.begin(), order.end());
    for (int m = 0; m < k; ++m) {
      const int j = order[static_cast<std::size_t>(m)].second;
      const double w =
          std::exp(-(g.nodes[i] - g.nodes[j]).squaredNorm() / (2.0 * g.sigma * g.sigma));
      edges.push_back({i, j, w});
    }
  }
  return edges;
}

}  // namespace

TEST_CASE("huber kernel values") {
  const double delta = 1e-4;
  CHECK(huber(0.0, delta) == 0.0);
  CHECK(huber(0.5e-4, delta) == 1.25e-9);   // quadratic branch: x^2/2
  CHECK(huber(-0.5e-4, delta) == 1.25e-9);  // even
  CHECK(huber(3e-4, delta) == doctest::Approx(2.5e-8).epsilon(1e-14));  // linear branch
  CHECK(huber(-3e-4, delta) == huber(3e-4, delta));
  // The two branches agree at the knee.
  CHECK(std::abs(huber(delta, delta) - 0.5 * delta * delta) <= 1e-24);
}

TEST_CASE("huber_sqrt_weight squares back to the kernel") {
  const double delta = 1e-4;
  CHECK(huber_sqrt_weight(0.0, delta) == 1.0);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-5e-3, 5e-3);
  for (int t = 0; t < 2000; ++t) {
    const double x = t < 4 ? std::array{delta, -delta, 0.3 * delta, -7.0 * delta}[t] : u(gen);
    const double w = huber_sqrt_weight(x, delta);
    const double lhs = w * x * w * x;
    const double rhs = 2.0 * huber(x, delta);
    CHECK(std::abs(lhs - rhs) <= 1e-14 * std::max(rhs, 1e-300));
    if (std::abs(x) <= delta) CHECK(w == 1.0);
  }
}

TEST_CASE("regularization edges match a brute-force rebuild") {
  const Fixture f = make_fixture(small_motion());
  ObjectiveConfig cfg;
  const WarpProblem problem(f.graph, f.source, f.target, f.corr, cfg);
  const auto want = oracle_edges(f.graph, cfg.reg_k);
  REQUIRE(problem.edges().size() == want.size());
  for (std::size_t e = 0; e < want.size(); ++e) {
    CHECK(problem.edges()[e].i == want[e].i);
    CHECK(problem.edges()[e].j == want[e].j);
    CHECK(std::abs(problem.edges()[e].w - want[e].w) <= 1e-15);
  }
}

TEST_CASE("stiffness rows square to the weighted huber energy") {
  const Fixture f = make_fixture(small_motion());
  ObjectiveConfig cfg;
  const WarpProblem problem(f.graph, f.source, f.target, f.corr, cfg);

  std::mt19937_64 gen(12);
  const Eigen::VectorXd theta = random_theta(problem.unknowns(), gen, 0.01);
  const ResidualSystem sys = problem.build_system(theta);

  // Layout: all plane rows, then point rows, then six stiffness rows per edge.
  const std::size_t n_plane = f.corr.dense.size();
  for (std::size_t row = 0; row < n_plane; ++row) {
    CHECK(sys.kinds[row] == ResidualKind::Plane);
  }
  const std::size_t stiff_base = n_plane;
  REQUIRE(sys.kinds.size() == stiff_base + 6 * problem.edges().size());

  for (std::size_t e = 0; e < problem.edges().size(); ++e) {
    const RegEdge& edge = problem.edges()[e];
    for (int c = 0; c < 6; ++c) {
      const std::size_t row = stiff_base + 6 * e + static_cast<std::size_t>(c);
      REQUIRE(sys.kinds[row] == ResidualKind::Stiffness);
      const double x = theta(6 * edge.i + c) - theta(6 * edge.j + c);
      const double r = sys.r(static_cast<Eigen::Index>(row));
      const double want = 2.0 * cfg.lambda_stiff * edge.w * huber(x, cfg.huber_delta);
      CHECK(std::abs(r * r - want) <= 1e-12 * std::max(1.0, want));
    }
  }
}

TEST_CASE("energy matches an independent recomputation") {
  const Fixture f = make_fixture(small_motion());
  ObjectiveConfig cfg;
  const WarpProblem problem(f.graph, f.source, f.target, f.corr, cfg);

  std::mt19937_64 gen(13);
  const Eigen::VectorXd theta = random_theta(problem.unknowns(), gen, 0.01);

  double want = 0.0;
  for (const IndexPair& pr : f.corr.dense) {
    const auto support = interp_support(f.graph, f.source.points[pr.src]);
    Vec3 ang = Vec3::Zero(), off = Vec3::Zero();
    for (const auto& [idx, w] : support) {
      ang += w * theta.segment<3>(6 * idx);
      off += w * theta.segment<3>(6 * idx + 3);
    }
    const RigidTransform T = euler_to_transform({ang, off});
    const double r =
        f.target.normals[pr.dst].dot(T.apply(f.source.points[pr.src]) - f.target.points[pr.dst]);
    want += r * r;
  }
  for (const RegEdge& edge : oracle_edges(f.graph, cfg.reg_k)) {
    for (int c = 0; c < 6; ++c) {
      want += cfg.lambda_stiff * edge.w *
              huber(theta(6 * edge.i + c) - theta(6 * edge.j + c), cfg.huber_delta);
    }
  }
  const double got = problem.energy(theta);
  CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, want));
}

TEST_CASE("analytic jacobian agrees with central finite differences") {
  const Fixture f = make_fixture(small_motion(), 6);
  ObjectiveConfig cfg;
  const WarpProblem problem(f.graph, f.source, f.target, f.corr, cfg);
  const int n = problem.unknowns();
  const double h = 1e-6;

  std::mt19937_64 gen(14);
  int tested = 0;
  for (int attempt = 0; attempt < 40 && tested < 5; ++attempt) {
    const Eigen::VectorXd theta = random_theta(n, gen, 0.01);

    // The stiffness residual is only C1; keep the probe away from the knee
    // so the quadratic convergence of the central difference holds.
    bool near_knee = false;
    for (const RegEdge& edge : problem.edges()) {
      for (int c = 0; c < 6 && !near_knee; ++c) {
        const double x = theta(6 * edge.i + c) - theta(6 * edge.j + c);
        near_knee = std::abs(std::abs(x) - cfg.huber_delta) < 3.0 * h;
      }
      if (near_knee) break;
    }
    if (near_knee) continue;

    const ResidualSystem sys = problem.build_system(theta);
    const Eigen::MatrixXd J(sys.J);
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(c) += h;
      tm(c) -= h;
      const Eigen::VectorXd fd =
          (problem.build_system(tp).r - problem.build_system(tm).r) / (2.0 * h);
      for (Eigen::Index row = 0; row < fd.size(); ++row) {
        const double err = std::abs(fd(row) - J(row, c));
        CHECK(err <= 1e-4 * std::max(1.0, std::abs(J(row, c))));
      }
    }
    ++tested;
  }
  CHECK(tested == 5);
}

TEST_CASE("empty correspondences are rejected") {
  const Fixture f = make_fixture(small_motion());
  CHECK_THROWS_WITH_AS(WarpProblem(f.graph, f.source, f.target, CorrespondenceSet{}, {}),
                       "no constraints", std::invalid_argument);
}

TEST_CASE("pcg solves the identity in one iteration") {
  std::mt19937_64 gen(15);
  Eigen::VectorXd b = random_theta(32, gen, 1.0);
  const auto apply = [](const Eigen::VectorXd& v) { return v; };
  const PcgResult res = pcg_solve(apply, b, Eigen::VectorXd::Ones(32), 1e-12, 100);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK((res.x - b).norm() <= 1e-14 * b.norm());
}

TEST_CASE("pcg returns zero immediately for b = 0") {
  const auto apply = [](const Eigen::VectorXd& v) { return v; };
  const PcgResult res =
      pcg_solve(apply, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Ones(8), 1e-12, 100);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.x.norm() == 0.0);
}

TEST_CASE("pcg matches a dense cholesky factorization") {
  std::mt19937_64 gen(16);
  for (int t = 0; t < 10; ++t) {
    const int n = 20 + 10 * t;
    Eigen::MatrixXd m(n, n);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = d(gen);
    }
    const Eigen::MatrixXd a = m.transpose() * m + n * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd b = random_theta(n, gen, 1.0);

    const auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a * v; };
    const PcgResult res = pcg_solve(apply, b, a.diagonal(), 1e-10, 10 * n);
    REQUIRE(res.converged);

    const Eigen::VectorXd want = a.ldlt().solve(b);
    CHECK((res.x - want).norm() <= 1e-6 * want.norm());
  }
}

TEST_CASE("gauss-newton decreases the objective monotonically") {
  const Fixture f = make_fixture(small_motion());
  ObjectiveConfig cfg;
  const GaussNewtonResult res = gauss_newton(f.graph, f.source, f.target, f.corr, cfg);

  REQUIRE(res.energy_trace.size() >= 2);
  CHECK(res.accepted_steps == static_cast<int>(res.energy_trace.size()) - 1);
  CHECK(!res.step_rejected);
  for (std::size_t i = 1; i < res.energy_trace.size(); ++i) {
    CHECK(res.energy_trace[i] <= res.energy_trace[i - 1] + 1e-12);
  }
  CHECK(res.energy_trace.back() < res.energy_trace.front());
  CHECK(res.params.size() == f.graph.size());
}
