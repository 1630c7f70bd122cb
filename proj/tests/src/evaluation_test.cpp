#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "topowarp/evaluation.hpp"

using namespace topowarp;

namespace {

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double extent = 0.1) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(gen), u(gen), u(gen)};
  return pts;
}

double oracle_overlap(const std::vector<Vec3>& x1, const std::vector<Vec3>& x2, double rho) {
  const auto close_count = [rho](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    std::size_t c = 0;
    for (const Vec3& p : a) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : b) best = std::min(best, (p - q).norm());
      if (best <= rho) ++c;
    }
    return c;
  };
  return static_cast<double>(close_count(x1, x2) + close_count(x2, x1)) /
         static_cast<double>(x1.size() + x2.size());
}

Flow2D random_flow(int w, int h, std::uint64_t seed, double invalid_fraction = 0.2) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Flow2D f;
  f.width = w;
  f.height = h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  f.u.resize(n);
  f.v.resize(n);
  f.valid.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    f.u[p] = u(gen);
    f.v[p] = u(gen);
    f.valid[p] = coin(gen) >= invalid_fraction ? 1 : 0;
  }
  return f;
}

TopologyEvent make_event(EventLabel label, int t, const Vec3& center, int n_side = 5) {
  TopologyEvent ev;
  ev.label = label;
  ev.timestamp = t;
  for (int iy = 0; iy < n_side; ++iy) {
    for (int ix = 0; ix < n_side; ++ix) {
      ev.points.push_back(center + Vec3(ix * 0.005, iy * 0.005, 0.0));
    }
  }
  return ev;
}

}  // namespace

TEST_CASE("overlap matches the brute-force double filter") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> ur(0.005, 0.08);
  for (int t = 0; t < 50; ++t) {
    const auto x1 = random_points(40 + t, 100 + t);
    const auto x2 = random_points(60 - t % 20, 200 + t);
    const double rho = ur(gen);
    CHECK(overlap_rho(x1, x2, rho) == oracle_overlap(x1, x2, rho));
  }
}

TEST_CASE("overlap is symmetric and monotone in the radius") {
  const auto x1 = random_points(80, 42);
  const auto x2 = random_points(70, 43);
  CHECK(overlap_rho(x1, x2, 0.03) == overlap_rho(x2, x1, 0.03));

  double prev = 0.0;
  for (double rho : {0.001, 0.01, 0.05, 0.2, 1.0}) {
    const double v = overlap_rho(x1, x2, rho);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == 1.0);  // at 1m everything in a 10cm cube is close

  CHECK(overlap_rho(x1, x1, 1e-12) == 1.0);  // self-overlap at any radius
  CHECK_THROWS_WITH_AS(overlap_rho({}, x2, 0.1), "empty set", std::invalid_argument);
  CHECK_THROWS_WITH_AS(overlap_rho(x1, {}, 0.1), "empty set", std::invalid_argument);
}

TEST_CASE("endpoint error") {
  Flow2D est, gt;
  est.width = gt.width = 1;
  est.height = gt.height = 1;
  est.u = {3.0};
  est.v = {4.0};
  est.valid = {1};
  gt.u = {0.0};
  gt.v = {0.0};
  gt.valid = {1};
  const FlowError err = epe(est, gt);
  CHECK(err.per_pixel == std::vector<double>{5.0});
  CHECK(err.mean == 5.0);
}

TEST_CASE("flow errors agree with per-pixel recomputation") {
  const Flow2D est = random_flow(16, 12, 44);
  const Flow2D gt = random_flow(16, 12, 45);

  const FlowError e = epe(est, gt);
  const FlowError a = ae(est, gt);
  REQUIRE(e.per_pixel.size() == a.per_pixel.size());

  std::size_t k = 0;
  double esum = 0.0, asum = 0.0;
  for (std::size_t p = 0; p < est.pixels(); ++p) {
    if (!est.valid[p] || !gt.valid[p]) continue;
    const double du = est.u[p] - gt.u[p];
    const double dv = est.v[p] - gt.v[p];
    const double want_epe = std::sqrt(du * du + dv * dv);
    CHECK(std::abs(e.per_pixel[k] - want_epe) <= 1e-12 * std::max(1.0, want_epe));

    const Eigen::Vector3d he(est.u[p], est.v[p], 1.0);
    const Eigen::Vector3d hg(gt.u[p], gt.v[p], 1.0);
    const double cosv = std::clamp(he.dot(hg) / (he.norm() * hg.norm()), -1.0, 1.0);
    const double want_ae = std::acos(cosv) * 180.0 / M_PI;
    CHECK(std::abs(a.per_pixel[k] - want_ae) <= 1e-9);

    esum += e.per_pixel[k];
    asum += a.per_pixel[k];
    ++k;
  }
  CHECK(k == e.per_pixel.size());
  CHECK(std::abs(e.mean - esum / k) <= 1e-12);
  CHECK(std::abs(a.mean - asum / k) <= 1e-12);
}

TEST_CASE("identical flows have negligible angular error") {
  const Flow2D f = random_flow(8, 8, 46, 0.0);
  const FlowError a = ae(f, f);
  for (double v : a.per_pixel) {
    CHECK(std::isfinite(v));  // the cosine clamp has to absorb 1 + epsilon
    // Not exactly zero: the cosine of equal vectors computes as
    // x / (sqrt(x) * sqrt(x)), which can land an ulp below 1, and acos
    // amplifies that to sqrt(2 eps) radians.
    CHECK(v <= 3e-6);
  }
  CHECK(a.mean <= 3e-6);
}

TEST_CASE("flow error edge cases") {
  Flow2D a = random_flow(4, 4, 47, 0.0);
  Flow2D b = random_flow(5, 4, 48, 0.0);
  CHECK_THROWS_WITH_AS(epe(a, b), "flow size mismatch", std::invalid_argument);

  Flow2D c = random_flow(4, 4, 49, 0.0);
  c.valid.assign(c.pixels(), 0);
  CHECK_THROWS_WITH_AS(epe(a, c), "no jointly valid pixels", std::invalid_argument);
}

TEST_CASE("warp_to_flow projects pixel displacements") {
  OrganizedCloud frame;
  frame.width = 9;
  frame.height = 7;
  frame.intr.fx = frame.intr.fy = 100.0;
  frame.intr.cx = 4.0;
  frame.intr.cy = 3.0;
  frame.pixel_to_index.assign(static_cast<std::size_t>(frame.width) * frame.height, -1);

  const auto add_pixel = [&](int u, int v) {
    frame.pixel_to_index[static_cast<std::size_t>(v) * frame.width + u] =
        static_cast<int>(frame.cloud.points.size());
    frame.index_to_pixel.push_back(v * frame.width + u);
    frame.cloud.points.push_back(backproject(frame.intr, u, v, 1.0));
    frame.cloud.normals.push_back(-Vec3::UnitZ());
    frame.cloud.colors.push_back({0.5, 0.5, 0.5});
  };
  add_pixel(4, 3);  // optical center, depth 1
  add_pixel(1, 5);

  DenseWarp warp = DenseWarp::identity(2);
  warp.transforms[0].t = Vec3(0.01, 0.02, 0.0);   // 1 px right, 2 px down
  warp.transforms[1].t = Vec3(0.0, 0.0, -3.0);    // ends up behind the camera

  const Flow2D flow = warp_to_flow(frame, warp);
  const std::size_t center = 3 * 9 + 4;
  REQUIRE(flow.valid[center] == 1);
  CHECK(flow.u[center] == 1.0);
  CHECK(flow.v[center] == 2.0);

  CHECK(flow.valid[5 * 9 + 1] == 0);  // behind the camera
  std::size_t n_valid = 0;
  for (auto v : flow.valid) n_valid += v;
  CHECK(n_valid == 1);

  DenseWarp bad = DenseWarp::identity(1);
  CHECK_THROWS_WITH_AS(warp_to_flow(frame, bad), "support size mismatch", std::invalid_argument);
}

TEST_CASE("event matching") {
  const double rho = 0.03;

  SUBCASE("identical events match perfectly") {
    const std::vector<TopologyEvent> gt{make_event(EventLabel::Separation, 4, Vec3::Zero())};
    const std::vector<TopologyEvent> det{make_event(EventLabel::Separation, 4, Vec3::Zero())};
    const EventMatchReport r = match_events(gt, det, rho, 2, 0.2);
    CHECK(r.matched_fraction_gt == 100.0);
    CHECK(r.matched_fraction_det == 100.0);
    CHECK(r.mean_overlap == 1.0);
    CHECK(r.mean_delay == 0.0);
    CHECK(r.gt_to_det == std::vector<int>{0});
    CHECK(r.det_to_gt == std::vector<int>{0});
  }

  SUBCASE("labels must agree") {
    const std::vector<TopologyEvent> gt{make_event(EventLabel::Separation, 0, Vec3::Zero())};
    const std::vector<TopologyEvent> det{make_event(EventLabel::Contact, 0, Vec3::Zero())};
    const EventMatchReport r = match_events(gt, det, rho, 2, 0.2);
    CHECK(r.matched_fraction_gt == 0.0);
    CHECK(r.gt_to_det == std::vector<int>{-1});
  }

  SUBCASE("timestamps gate and the delay keeps its sign") {
    const std::vector<TopologyEvent> gt{make_event(EventLabel::Contact, 5, Vec3::Zero())};
    std::vector<TopologyEvent> det{make_event(EventLabel::Contact, 3, Vec3::Zero())};
    EventMatchReport r = match_events(gt, det, rho, 2, 0.2);
    CHECK(r.matched_fraction_gt == 100.0);
    CHECK(r.mean_delay == 2.0);  // t_gt - t_det

    det[0].timestamp = 8;  // |5 - 8| = 3 > dt_max
    r = match_events(gt, det, rho, 2, 0.2);
    CHECK(r.matched_fraction_gt == 0.0);
  }

  SUBCASE("weak overlap is rejected") {
    const std::vector<TopologyEvent> gt{make_event(EventLabel::Separation, 0, Vec3::Zero())};
    const std::vector<TopologyEvent> det{make_event(EventLabel::Separation, 0, Vec3(5, 0, 0))};
    const EventMatchReport r = match_events(gt, det, rho, 2, 0.2);
    CHECK(r.matches.empty());
    CHECK(r.matched_fraction_gt == 0.0);
  }

  SUBCASE("overlap ties resolve to the lower index") {
    const std::vector<TopologyEvent> gt{make_event(EventLabel::Separation, 0, Vec3::Zero())};
    const std::vector<TopologyEvent> det{make_event(EventLabel::Separation, 0, Vec3::Zero()),
                                         make_event(EventLabel::Separation, 0, Vec3::Zero())};
    const EventMatchReport r = match_events(gt, det, rho, 2, 0.2);
    CHECK(r.gt_to_det == std::vector<int>{0});
    CHECK(r.matched_fraction_det == 100.0);  // both detections still map back
  }

  SUBCASE("empty inputs give zero fractions") {
    const std::vector<TopologyEvent> some{make_event(EventLabel::Contact, 0, Vec3::Zero())};
    EventMatchReport r = match_events({}, some, rho, 2, 0.2);
    CHECK(r.matched_fraction_gt == 0.0);
    CHECK(r.matched_fraction_det == 0.0);
    CHECK(r.det_to_gt == std::vector<int>{-1});
    r = match_events(some, {}, rho, 2, 0.2);
    CHECK(r.matched_fraction_gt == 0.0);
    CHECK(r.gt_to_det == std::vector<int>{-1});
  }

  SUBCASE("random sets agree with an exhaustive argmax") {
    std::mt19937_64 gen(50);
    std::uniform_int_distribution<int> label(0, 1);
    std::uniform_int_distribution<int> time(0, 4);
    std::uniform_real_distribution<double> off(-0.05, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<TopologyEvent> gt, det;
      for (int i = 0; i < 4; ++i) {
        gt.push_back(make_event(label(gen) ? EventLabel::Separation : EventLabel::Contact,
                                time(gen), Vec3(off(gen), off(gen), 0.0)));
      }
      for (int j = 0; j < 5; ++j) {
        det.push_back(make_event(label(gen) ? EventLabel::Separation : EventLabel::Contact,
                                 time(gen), Vec3(off(gen), off(gen), 0.0)));
      }
      const EventMatchReport r = match_events(gt, det, rho, 2, 0.2);

      std::vector<int> want_gt(gt.size(), -1);
      std::vector<int> want_det(det.size(), -1);
      std::vector<double> bg(gt.size(), 0.0), bd(det.size(), 0.0);
      for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t j = 0; j < det.size(); ++j) {
          if (gt[i].label != det[j].label) continue;
          if (std::abs(gt[i].timestamp - det[j].timestamp) > 2) continue;
          const double ov = oracle_overlap(gt[i].points, det[j].points, rho);
          if (ov < 0.2) continue;
          if (ov > bg[i]) {
            bg[i] = ov;
            want_gt[i] = static_cast<int>(j);
          }
          if (ov > bd[j]) {
            bd[j] = ov;
            want_det[j] = static_cast<int>(i);
          }
        }
      }
      CHECK(r.gt_to_det == want_gt);
      CHECK(r.det_to_gt == want_det);

      const auto pct = [](const std::vector<int>& m) {
        const auto n = std::count_if(m.begin(), m.end(), [](int x) { return x >= 0; });
        return 100.0 * static_cast<double>(n) / static_cast<double>(m.size());
      };
      CHECK(r.matched_fraction_gt == pct(want_gt));
      CHECK(r.matched_fraction_det == pct(want_det));
    }
  }
}

TEST_CASE("separation registration error") {
  // Target: a z=1 plane sampled at 2cm, plus its ideal depth frame.
  OrientedPointCloud target;
  for (int iy = 0; iy < 12; ++iy) {
    for (int ix = 0; ix < 12; ++ix) {
      target.points.push_back({-0.11 + ix * 0.02, -0.11 + iy * 0.02, 1.0});
      target.normals.push_back(-Vec3::UnitZ());
      target.colors.push_back({0.5, 0.5, 0.5});
    }
  }
  DepthFrame frame;
  frame.width = 32;
  frame.height = 32;
  frame.intr.fx = frame.intr.fy = 100.0;
  frame.intr.cx = frame.intr.cy = 15.5;
  frame.depth.assign(32 * 32, 1.0);

  OrientedPointCloud source = target;

  SUBCASE("a 5mm tangential offset measures 5mm") {
    DenseWarp warp = DenseWarp::identity(source.size());
    const std::vector<int> mask{0, 5, 17};
    for (int idx : mask) warp.transforms[idx].t = Vec3(0.005, 0.0, 0.0);
    const SepError err = separation_registration_error(source, warp, mask, target, frame, 0.01);
    CHECK(err.points_used == 3);
    CHECK(err.points_occluded == 0);
    CHECK(err.mean_mm == doctest::Approx(5.0).epsilon(1e-9));
  }

  SUBCASE("points pushed behind the target are discarded") {
    DenseWarp warp = DenseWarp::identity(source.size());
    warp.transforms[0].t = Vec3(0.005, 0.0, 0.0);
    warp.transforms[1].t = Vec3(0.0, 0.0, 0.05);  // 5cm behind the plane
    const std::vector<int> mask{0, 1};
    const SepError err = separation_registration_error(source, warp, mask, target, frame, 0.01);
    CHECK(err.points_used == 1);
    CHECK(err.points_occluded == 1);
    CHECK(err.mean_mm == doctest::Approx(5.0).epsilon(1e-9));
  }

  SUBCASE("depth excess below the threshold is not occlusion") {
    DenseWarp warp = DenseWarp::identity(source.size());
    warp.transforms[0].t = Vec3(0.0, 0.0, 0.005);  // within dz_occ
    const SepError err =
        separation_registration_error(source, warp, {0}, target, frame, 0.01);
    CHECK(err.points_used == 1);
    CHECK(err.points_occluded == 0);
  }

  SUBCASE("points leaving the frame stay measurable") {
    DenseWarp warp = DenseWarp::identity(source.size());
    warp.transforms[0].t = Vec3(5.0, 0.0, 0.5);  // projects far out of bounds
    const SepError err =
        separation_registration_error(source, warp, {0}, target, frame, 0.01);
    CHECK(err.points_used == 1);
    CHECK(err.points_occluded == 0);
  }

  SUBCASE("validation") {
    const DenseWarp warp = DenseWarp::identity(source.size());
    CHECK_THROWS_WITH_AS(separation_registration_error(source, warp, {}, target, frame, 0.01),
                         "empty mask", std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        separation_registration_error(source, warp, {9999}, target, frame, 0.01),
        "mask index out of range", std::invalid_argument);

    DenseWarp behind = DenseWarp::identity(source.size());
    behind.transforms[0].t = Vec3(0.0, 0.0, 0.05);
    CHECK_THROWS_WITH_AS(
        separation_registration_error(source, behind, {0}, target, frame, 0.01),
        "no visible points", std::invalid_argument);
  }
}
