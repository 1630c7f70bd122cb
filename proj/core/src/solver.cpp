#include "topowarp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace topowarp {

double huber(double x, double delta) {
  const double ax = std::abs(x);
  if (ax <= delta) return 0.5 * x * x;
  return delta * (ax - 0.5 * delta);
}

double huber_sqrt_weight(double x, double delta) {
  if (x == 0.0) return 1.0;
  return std::sqrt(2.0 * huber(x, delta)) / std::abs(x);
}

namespace {

// Square-rooted robust residual s(x) = sign(x) * sqrt(2 huber(x)) and its
// derivative. s is C1: inside the knee s(x) = x with slope 1, outside the
// slope decays as delta / |s|.
inline double huber_sqrt_residual(double x, double delta) {
  const double ax = std::abs(x);
  if (ax <= delta) return x;
  const double s = std::sqrt(delta * (2.0 * ax - delta));
  return x < 0.0 ? -s : s;
}

inline double huber_sqrt_residual_deriv(double x, double delta) {
  const double ax = std::abs(x);
  if (ax <= delta) return 1.0;
  return delta / std::sqrt(delta * (2.0 * ax - delta));
}

}  // namespace

WarpProblem::WarpProblem(const DeformationGraph& g, const OrientedPointCloud& source,
                         const OrientedPointCloud& target, const CorrespondenceSet& corr,
                         const ObjectiveConfig& cfg)
    : node_count_(g.size()), cfg_(cfg) {
  if (corr.dense.empty() && corr.sparse.empty()) {
    throw std::invalid_argument("no constraints");
  }

  plane_anchors_.reserve(corr.dense.size());
  for (const IndexPair& p : corr.dense) {
    Anchor a;
    a.x = source.points[p.src];
    a.q = target.points[p.dst];
    a.n = target.normals[p.dst];
    a.support = interp_support(g, a.x);
    plane_anchors_.push_back(std::move(a));
  }
  point_anchors_.reserve(corr.sparse.size());
  for (const IndexPair& p : corr.sparse) {
    Anchor a;
    a.x = source.points[p.src];
    a.q = target.points[p.dst];
    a.support = interp_support(g, a.x);
    point_anchors_.push_back(std::move(a));
  }

  // Regularization edges: every node against its reg_k nearest neighbors
  // (all others when the graph is small). Edges are directed, matching the
  // double sum of the smoothness term.
  const int k = std::min<int>(cfg.reg_k, static_cast<int>(node_count_) - 1);
  const double inv_two_sigma2 = 1.0 / (2.0 * g.sigma * g.sigma);
  for (std::size_t i = 0; i < node_count_; ++i) {
    // k+1 hits cover the query node itself; skip it and keep k neighbors.
    const auto hits = g.node_index.knn(g.nodes[i], k + 1);
    int added = 0;
    for (const auto& h : hits) {
      if (h.index == static_cast<int>(i)) continue;
      if (added == k) break;
      edges_.push_back({static_cast<int>(i), h.index,
                        std::exp(-(g.nodes[i] - g.nodes[h.index]).squaredNorm() * inv_two_sigma2)});
      ++added;
    }
  }
}

void WarpProblem::interp_at(const Anchor& a, const Eigen::VectorXd& theta, Vec3& angles,
                            Vec3& offset) const {
  angles.setZero();
  offset.setZero();
  for (const auto& [idx, w] : a.support) {
    angles += w * theta.segment<3>(6 * idx);
    offset += w * theta.segment<3>(6 * idx + 3);
  }
}

ResidualSystem WarpProblem::build_system(const Eigen::VectorXd& theta) const {
  if (theta.size() != unknowns()) {
    throw std::invalid_argument("parameter vector size mismatch");
  }
  const std::size_t rows =
      plane_anchors_.size() + 3 * point_anchors_.size() + 6 * edges_.size();

  ResidualSystem sys;
  sys.r.resize(static_cast<Eigen::Index>(rows));
  sys.kinds.reserve(rows);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(plane_anchors_.size() * 24 + point_anchors_.size() * 72 + edges_.size() * 12);

  Eigen::Index row = 0;
  const double sqrt_lp = std::sqrt(cfg_.lambda_point);

  for (const Anchor& a : plane_anchors_) {
    Vec3 ang, off;
    interp_at(a, theta, ang, off);
    const RigidTransform T = euler_to_transform({ang, off});
    Mat3 dR[3];
    rotation_derivatives(ang, dR);

    sys.r(row) = a.n.dot(T.R * a.x + off - a.q);
    Eigen::Matrix<double, 6, 1> grad;
    for (int kk = 0; kk < 3; ++kk) grad(kk) = a.n.dot(dR[kk] * a.x);
    grad.tail<3>() = a.n;
    for (const auto& [idx, w] : a.support) {
      for (int c = 0; c < 6; ++c) trips.emplace_back(row, 6 * idx + c, w * grad(c));
    }
    sys.kinds.push_back(ResidualKind::Plane);
    ++row;
  }

  for (const Anchor& a : point_anchors_) {
    Vec3 ang, off;
    interp_at(a, theta, ang, off);
    const RigidTransform T = euler_to_transform({ang, off});
    Mat3 dR[3];
    rotation_derivatives(ang, dR);

    const Vec3 res = sqrt_lp * (T.R * a.x + off - a.q);
    Eigen::Matrix<double, 3, 6> grad;
    for (int kk = 0; kk < 3; ++kk) grad.col(kk) = sqrt_lp * (dR[kk] * a.x);
    grad.rightCols<3>() = sqrt_lp * Mat3::Identity();
    for (int rr = 0; rr < 3; ++rr) {
      sys.r(row + rr) = res(rr);
      for (const auto& [idx, w] : a.support) {
        for (int c = 0; c < 6; ++c) trips.emplace_back(row + rr, 6 * idx + c, w * grad(rr, c));
      }
      sys.kinds.push_back(ResidualKind::Point);
    }
    row += 3;
  }

  for (const RegEdge& e : edges_) {
    const double scale = std::sqrt(cfg_.lambda_stiff * e.w);
    for (int c = 0; c < 6; ++c) {
      const double x = theta(6 * e.i + c) - theta(6 * e.j + c);
      sys.r(row) = scale * huber_sqrt_residual(x, cfg_.huber_delta);
      const double ds = scale * huber_sqrt_residual_deriv(x, cfg_.huber_delta);
      trips.emplace_back(row, 6 * e.i + c, ds);
      trips.emplace_back(row, 6 * e.j + c, -ds);
      sys.kinds.push_back(ResidualKind::Stiffness);
      ++row;
    }
  }

  sys.J.resize(static_cast<Eigen::Index>(rows), unknowns());
  sys.J.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

double WarpProblem::energy(const Eigen::VectorXd& theta) const {
  if (theta.size() != unknowns()) {
    throw std::invalid_argument("parameter vector size mismatch");
  }
  double e = 0.0;
  for (const Anchor& a : plane_anchors_) {
    Vec3 ang, off;
    interp_at(a, theta, ang, off);
    const RigidTransform T = euler_to_transform({ang, off});
    const double r = a.n.dot(T.R * a.x + off - a.q);
    e += r * r;
  }
  for (const Anchor& a : point_anchors_) {
    Vec3 ang, off;
    interp_at(a, theta, ang, off);
    const RigidTransform T = euler_to_transform({ang, off});
    e += cfg_.lambda_point * (T.R * a.x + off - a.q).squaredNorm();
  }
  for (const RegEdge& edge : edges_) {
    double psi = 0.0;
    for (int c = 0; c < 6; ++c) {
      psi += huber(theta(6 * edge.i + c) - theta(6 * edge.j + c), cfg_.huber_delta);
    }
    e += cfg_.lambda_stiff * edge.w * psi;
  }
  return e;
}

ResidualSystem build_system(const DeformationGraph& g, const Eigen::VectorXd& theta,
                            const OrientedPointCloud& source, const OrientedPointCloud& target,
                            const CorrespondenceSet& corr, const ObjectiveConfig& cfg) {
  return WarpProblem(g, source, target, corr, cfg).build_system(theta);
}

PcgResult pcg_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& a_apply,
                    const Eigen::VectorXd& b, const Eigen::VectorXd& precond_diag, double tol,
                    int max_iters) {
  const Eigen::Index n = b.size();
  PcgResult out;
  out.x = Eigen::VectorXd::Zero(n);

  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd inv_m = precond_diag.cwiseMax(1e-12).cwiseInverse();
  Eigen::VectorXd r = b;  // residual of x = 0
  Eigen::VectorXd z = inv_m.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);

  for (int k = 0; k < max_iters; ++k) {
    const Eigen::VectorXd ap = a_apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      break;  // operator not positive along p; bail with the current iterate
    }
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    ++out.iterations;
    if (r.norm() / bnorm <= tol) {
      out.converged = true;
      break;
    }
    z = inv_m.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }

  out.rel_residual = (a_apply(out.x) - b).norm() / bnorm;
  if (out.rel_residual <= tol) out.converged = true;
  return out;
}

GaussNewtonResult gauss_newton(const DeformationGraph& g, const OrientedPointCloud& source,
                               const OrientedPointCloud& target, const CorrespondenceSet& corr,
                               const ObjectiveConfig& cfg) {
  WarpProblem problem(g, source, target, corr, cfg);
  const int n = problem.unknowns();

  Eigen::VectorXd theta(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    theta.segment<6>(static_cast<Eigen::Index>(6 * i)) = g.params[i].as_vector();
  }

  GaussNewtonResult result;
  double e = problem.energy(theta);
  result.energy_trace.push_back(e);

  const int cg_iters = cfg.cg_max_iters > 0
                           ? cfg.cg_max_iters
                           : static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));

  for (int it = 0; it < cfg.max_gn_iters; ++it) {
    const ResidualSystem sys = problem.build_system(theta);
    Eigen::VectorXd b = -(sys.J.transpose() * sys.r);
    if (b.lpNorm<Eigen::Infinity>() < 1e-14) break;

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (int row = 0; row < sys.J.outerSize(); ++row) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itj(sys.J, row); itj;
           ++itj) {
        diag(itj.col()) += itj.value() * itj.value();
      }
    }

    const double lm = cfg.lm_damping;
    const auto a_apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      Eigen::VectorXd av = sys.J.transpose() * (sys.J * v);
      if (lm > 0.0) av += lm * diag.cwiseProduct(v);
      return av;
    };
    Eigen::VectorXd precond = lm > 0.0 ? Eigen::VectorXd((1.0 + lm) * diag) : diag;

    const PcgResult cg = pcg_solve(a_apply, b, precond, cfg.cg_tol, cg_iters);
    if (cg.x.lpNorm<Eigen::Infinity>() == 0.0) break;

    // Step halving: accept the first scale that does not increase the true
    // objective; a fully exhausted search ends the optimization.
    bool accepted = false;
    double scale = 1.0;
    for (int h = 0; h <= 8; ++h) {
      const Eigen::VectorXd cand = theta + scale * cg.x;
      const double ec = problem.energy(cand);
      if (cfg.pure_gn || ec <= e) {
        theta = cand;
        e = ec;
        result.energy_trace.push_back(e);
        ++result.accepted_steps;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      result.step_rejected = true;
      break;
    }
  }

  result.params.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    result.params[i] =
        EulerParams6::from_vector(theta.segment<6>(static_cast<Eigen::Index>(6 * i)));
  }
  return result;
}

}  // namespace topowarp
