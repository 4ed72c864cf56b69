#include <cmath>

#include "doctest.h"
#include "srb/builtin_systems.hpp"
#include "srb/system.hpp"
#include "test_support.hpp"

using namespace srb;
using srb::testing::fd_jacobian;

namespace {

void check_derivative_against_fd(const SystemSpec& sys, int n_points, double tol) {
  auto rng = make_rng(17, 5);
  for (int i = 0; i < n_points; ++i) {
    Vec x = uniform_in_box(sys.basin, rng);
    Mat analytic = sys.deriv_eval(x);
    Mat fd = fd_jacobian(sys, x);
    double scale = std::max(1.0, analytic.norm());
    CHECK((analytic - fd).norm() / scale < tol);
  }
}

double hausdorff(const SystemSpec& sys, const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double h = 0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, sys.dist(p, q));
    h = std::max(h, best);
  }
  for (const auto& q : b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : a) best = std::min(best, sys.dist(p, q));
    h = std::max(h, best);
  }
  return h;
}

}  // namespace

TEST_CASE("derivatives agree with finite differences") {
  check_derivative_against_fd(make_solenoid(), 100, 1e-5);
  check_derivative_against_fd(make_solenoid(0.25, 0.5), 100, 1e-5);
  check_derivative_against_fd(make_fat_cat(), 100, 1e-5);
}

TEST_CASE("galerkin-rd derivative agrees with finite differences" * doctest::timeout(120)) {
  check_derivative_against_fd(make_galerkin_rd(), 100, 1e-5);
}

TEST_CASE("basin boxes map strictly into themselves at sample resolution") {
  for (const auto& name : builtin_system_names()) {
    auto sys = make_system(name);
    auto rng = make_rng(23, 6);
    int n = name == "galerkin-rd" ? 50 : 400;
    for (int i = 0; i < n; ++i) {
      Vec x = uniform_in_box(sys.basin, rng);
      Vec y = sys.map_eval(x);
      CHECK(sys.basin.contains(y, 0.0));
    }
  }
}

TEST_CASE("derivative is injective on attractor samples") {
  for (const auto& name : {"solenoid", "warped-solenoid", "fat-cat"}) {
    auto sys = make_system(name);
    for (const auto& x : attractor_sample(sys, 100, 60, 7)) {
      Eigen::JacobiSVD<Mat> svd(sys.deriv_eval(x));
      CHECK(svd.singularValues().minCoeff() > 1e-8);
    }
  }
}

TEST_CASE("iterate: zero steps returns the point alone") {
  auto sys = make_fat_cat();
  Vec x(3);
  x << 0.3, 0.4, 0.1;
  auto seg = iterate(sys, x, 0);
  CHECK(seg.length() == 1);
  CHECK(sys.dist(seg.front(), x) == 0.0);
}

TEST_CASE("iterate: solenoid hand evaluation") {
  auto sys = make_solenoid();
  Vec x(3);
  x << 0.0, 0.5, 0.0;
  auto seg = iterate(sys, x, 1);
  CHECK(seg.back()[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(seg.back()[1] == doctest::Approx(0.625).epsilon(1e-14));
  CHECK(seg.back()[2] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("iterate: fat-cat torus fixed point contracts the appended factor") {
  auto sys = make_fat_cat();
  const double c = sys.metadata.at("c");
  Vec x(3);
  x << 0.0, 0.0, 0.3;
  auto seg = iterate(sys, x, 2);
  CHECK(seg.back()[0] == doctest::Approx(0.0));
  CHECK(seg.back()[1] == doctest::Approx(0.0));
  CHECK(seg.back()[2] == doctest::Approx(0.3 * c * c).epsilon(1e-14));
}

TEST_CASE("iterate flags basin escape") {
  auto sys = make_linear_system(Vec(Vec::Constant(2, 2.0)));
  Vec x(2);
  x << 1.0, 1.0;
  CHECK_THROWS_WITH_AS(iterate(sys, x, 100), doctest::Contains("orbit-escapes-basin"),
                       OpError);
}

TEST_CASE("attractor_sample: no burn-in returns the raw seeds") {
  auto sys = make_solenoid();
  auto pts = attractor_sample(sys, 16, 0, 99);
  auto again = attractor_sample(sys, 16, 0, 99);
  REQUIRE(pts.size() == 16);
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(sys.dist(pts[i], again[i]) == 0.0);
    CHECK(sys.basin.contains(pts[i]));
  }
}

TEST_CASE("attractor_sample: fat-cat transverse coordinate is contracted") {
  auto sys = make_fat_cat();
  const double c = sys.metadata.at("c");
  for (const auto& p : attractor_sample(sys, 100, 30, 5)) {
    CHECK(std::abs(p[2]) <= 0.5 * std::pow(c, 30) + 1e-15);
  }
}

TEST_CASE("attractor_sample: solenoid cloud is inside the invariant fiber radius") {
  auto sys = make_solenoid();
  const double r = sys.metadata.at("fiber_radius");
  for (const auto& p : attractor_sample(sys, 500, 50, 5)) {
    CHECK(p.segment<2>(1).norm() <= r + 1e-12);
  }
}

TEST_CASE("attractor cloud is forward-invariant up to sampling resolution") {
  for (const auto& name : {"solenoid", "fat-cat"}) {
    auto sys = make_system(name);
    auto cloud_a = attractor_sample(sys, 400, 60, 11);
    auto cloud_b = attractor_sample(sys, 400, 60, 12);
    double sampling_noise = hausdorff(sys, cloud_a, cloud_b);
    std::vector<Vec> mapped;
    for (const auto& p : cloud_a) mapped.push_back(sys.map_eval(p));
    CHECK(hausdorff(sys, mapped, cloud_a) <= 2.0 * sampling_noise + 1e-9);
  }
}

TEST_CASE("inverse_on_attractor recovers preimages on the built-ins") {
  for (const auto& name : {"solenoid", "warped-solenoid", "fat-cat"}) {
    auto sys = make_system(name);
    auto pts = attractor_sample(sys, 1000, 60, 13);
    for (const auto& p : pts) {
      Vec y = sys.map_eval(p);
      auto bwd = inverse_on_attractor(sys, y, 1);
      CHECK(sys.dist(bwd.preimage(1), p) < 1e-9);
    }
  }
}

TEST_CASE("inverse_on_attractor: fat-cat fixed point is its own preimage chain") {
  auto sys = make_fat_cat();
  Vec x = Vec::Zero(3);
  auto bwd = inverse_on_attractor(sys, x, 5);
  for (int k = 1; k <= 5; ++k) CHECK(bwd.preimage(k).norm() < 1e-14);
}

TEST_CASE("inverse_on_attractor: doubling branch is chosen by fiber membership") {
  auto sys = make_solenoid();
  // land exactly on angle 1/2 by iterating a point with angle 1/4 forward
  auto orbit = attractor_orbits(sys, 40, 60, 0, 21);
  bool checked = false;
  for (const auto& so : orbit) {
    Vec x = so.point;
    x[0] = 0.25;
    Vec y = sys.map_eval(x);  // angle exactly 1/2 up to fp
    auto bwd = inverse_on_attractor(sys, y, 1);
    double theta = bwd.preimage(1)[0];
    CHECK((std::abs(theta - 0.25) < 1e-9 || std::abs(theta - 0.75) < 1e-9));
    checked = true;
    break;
  }
  CHECK(checked);
}

TEST_CASE("backward orbit points stay inside the inflated sample hull") {
  auto sys = make_solenoid();
  auto samples = attractor_sample(sys, 500, 60, 31);
  Box hull = bounding_box(samples, sys.basin, 0.02);
  auto orbits = attractor_orbits(sys, 20, 80, 25, 31);
  for (const auto& so : orbits) {
    auto bwd = inverse_on_attractor(sys, so.point, 20);
    for (int k = 1; k <= bwd.depth(); ++k) {
      CHECK(hull.contains(bwd.preimage(k), 1e-9));
      CHECK(bwd.residuals[static_cast<size_t>(k - 1)] <= 1e-10);
    }
  }
}

TEST_CASE("newton fallback recovers preimages without an analytic inverse") {
  auto sys = make_fat_cat();
  SystemSpec stripped = sys;
  stripped.known_inverse = nullptr;
  auto seeds = attractor_orbits(sys, 200, 60, 3, 41);
  const auto& target = seeds.front();
  Vec y = sys.map_eval(target.point);
  auto bwd = inverse_on_attractor(stripped, y, 2, &seeds);
  CHECK(sys.dist(bwd.preimage(1), target.point) < 1e-8);
}

TEST_CASE("verify_hyperbolicity: diagonal linear map with tight rates") {
  Vec diag(2);
  diag << 2.0, 0.5;
  auto sys = make_linear_system(diag);
  auto field = axis_splitting(2, 1);
  std::vector<Vec> pts;
  auto rng = make_rng(51, 3);
  for (int i = 0; i < 50; ++i) pts.push_back(Vec::Random(2));
  auto rep = verify_hyperbolicity(sys, field, std::log(2.0), true, pts);
  CHECK(rep.passed);
  CHECK(rep.min_unstable_ratio == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.max_center_stable_ratio == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("verify_hyperbolicity: solenoid block rates pass at the skew rate") {
  auto sys = make_solenoid();
  auto pts = attractor_sample(sys, 2000, 50, 61);
  auto rep = verify_hyperbolicity(sys, axis_splitting(3, 1), std::log(2.0) - 1e-6, true, pts);
  CHECK(rep.passed);
  CHECK(rep.max_center_stable_ratio == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("verify_hyperbolicity: every built-in passes with its splitting and rate") {
  for (const auto& name : {"solenoid", "warped-solenoid", "fat-cat"}) {
    auto sys = make_system(name);
    auto pts = attractor_sample(sys, 10000, 60, 71);
    auto rep = verify_hyperbolicity(sys, analytic_splitting(sys), sys.metadata.at("lambda0"),
                                    true, pts);
    INFO(name, " min_u=", rep.min_unstable_ratio, " max_cs=", rep.max_center_stable_ratio);
    CHECK(rep.passed);
  }
}

TEST_CASE("verify_hyperbolicity: corrupted splitting fails with a witness") {
  auto sys = make_fat_cat();
  auto good = analytic_splitting(sys);
  SplittingField swapped;
  swapped.unstable = [good](const Vec& x) { return Mat(good.center_stable(x).leftCols(1)); };
  swapped.center_stable = [good](const Vec& x) { return good.unstable(x); };
  auto pts = attractor_sample(sys, 200, 40, 81);
  auto rep = verify_hyperbolicity(sys, swapped, 0.9, true, pts);
  CHECK_FALSE(rep.passed);
  CHECK(rep.min_unstable_ratio < 1.0);  // the "unstable" vector contracts
  CHECK(rep.worst_unstable_witness.size() == 3);
}
