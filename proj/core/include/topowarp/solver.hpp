#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "topowarp/correspondence.hpp"
#include "topowarp/warp.hpp"

namespace topowarp {

struct ObjectiveConfig {
  double lambda_point = 2.0;   // weight of point-to-point vs point-to-plane
  double lambda_stiff = 200.0; // weight of the node smoothness term
  double huber_delta = 1e-4;   // robust kernel knee, per parameter component
  int reg_k = 6;               // regularization neighbors per node
  int max_gn_iters = 5;
  int cg_max_iters = 0;        // 0 = ceil(10 * sqrt(#unknowns))
  double cg_tol = 1e-6;
  bool pure_gn = false;        // accept full steps without the energy test
  double lm_damping = 0.0;     // optional Levenberg diagonal damping
};

// huber(x) = x^2/2 inside |x| <= delta, delta*(|x| - delta/2) outside.
double huber(double x, double delta);
// Weight w with (w*x)^2 == 2*huber(x, delta); w(0) = 1. Inside the
// quadratic region the weighted residual is x itself, outside it grows
// like sqrt(|x|), which is what makes the stiffness term robust.
double huber_sqrt_weight(double x, double delta);

enum class ResidualKind { Plane, Point, Stiffness };

struct ResidualSystem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> J;  // rows x 6*|nodes|
  Eigen::VectorXd r;                               // residual per row
  std::vector<ResidualKind> kinds;                 // row annotations
};

struct RegEdge {
  int i;
  int j;
  double w;  // exp(-|g_i - g_j|^2 / (2 sigma^2))
};

// One registration subproblem: the warp of a deformation graph is fit so
// that warped source points meet their corresponding target points. Point
// positions, interpolation supports and regularization edges are fixed at
// construction; only the stacked node parameters theta (6 per node) vary.
// Throws std::invalid_argument("no constraints") when the correspondence
// set is entirely empty.
class WarpProblem {
 public:
  WarpProblem(const DeformationGraph& g, const OrientedPointCloud& source,
              const OrientedPointCloud& target, const CorrespondenceSet& corr,
              const ObjectiveConfig& cfg);

  int unknowns() const { return static_cast<int>(6 * node_count_); }

  // Jacobian and residuals of the square-rooted least squares form at theta.
  ResidualSystem build_system(const Eigen::VectorXd& theta) const;

  // True objective at theta: sum of squared plane residuals
  //   + lambda_point * sum of squared point residuals
  //   + lambda_stiff * sum_e w_e * sum_c huber(dtheta_c).
  double energy(const Eigen::VectorXd& theta) const;

  const std::vector<RegEdge>& edges() const { return edges_; }

 private:
  struct Anchor {
    Vec3 x;                                      // source point (already warped by the outer loop)
    Vec3 q;                                      // target point
    Vec3 n;                                      // target normal (plane terms)
    std::vector<std::pair<int, double>> support; // node id, normalized weight
  };

  void interp_at(const Anchor& a, const Eigen::VectorXd& theta, Vec3& angles,
                 Vec3& offset) const;

  std::size_t node_count_;
  ObjectiveConfig cfg_;
  std::vector<Anchor> plane_anchors_;
  std::vector<Anchor> point_anchors_;
  std::vector<RegEdge> edges_;
};

// Free-function wrapper over WarpProblem for one-shot system assembly.
ResidualSystem build_system(const DeformationGraph& g, const Eigen::VectorXd& theta,
                            const OrientedPointCloud& source, const OrientedPointCloud& target,
                            const CorrespondenceSet& corr, const ObjectiveConfig& cfg);

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  double rel_residual = 0.0;  // |A x - b| / |b|, recomputed at exit
};

// Conjugate gradients with a (clamped) diagonal preconditioner on an SPD
// operator given as a matrix-vector product. b == 0 returns x == 0
// immediately.
PcgResult pcg_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& a_apply,
                    const Eigen::VectorXd& b, const Eigen::VectorXd& precond_diag, double tol,
                    int max_iters);

struct GaussNewtonResult {
  std::vector<EulerParams6> params;   // optimized node parameters
  std::vector<double> energy_trace;   // objective before and after each accepted step
  int accepted_steps = 0;
  bool step_rejected = false;         // line search ran out of halvings
};

// Gauss-Newton with step halving: each iteration solves the normal
// equations J^T J d = -J^T r by PCG and accepts theta + s*d for the first
// s in {1, 1/2, ..., 1/256} that does not increase the objective. Starts
// from the parameters stored in the graph.
GaussNewtonResult gauss_newton(const DeformationGraph& g, const OrientedPointCloud& source,
                               const OrientedPointCloud& target, const CorrespondenceSet& corr,
                               const ObjectiveConfig& cfg);

}  // namespace topowarp
