#include "doctest.h"
#include "srb/geometry.hpp"

using namespace srb;

TEST_CASE("wrapped metric on a torus axis") {
  Box box;
  box.lo = Vec::Zero(2);
  box.hi = Vec::Ones(2);
  box.periodic = {true, false};

  Vec a(2), b(2);
  a << 0.95, 0.0;
  b << 0.05, 0.0;
  CHECK(distance(a, b, box) == doctest::Approx(0.10).epsilon(1e-12));

  Vec c(2);
  c << 1.75, 0.3;
  Vec w = wrap_point(c, box);
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(0.3));
}

TEST_CASE("principal angles and orthonormalization") {
  auto rng = make_rng(3, 0);
  Mat q = random_orthonormal(5, 3, rng);
  CHECK((q.transpose() * q - Mat::Identity(3, 3)).norm() < 1e-12);

  Mat e = Mat::Identity(3, 3).leftCols(1);
  Mat f(3, 1);
  f << std::cos(0.4), std::sin(0.4), 0.0;
  auto angles = principal_angles(e, f);
  CHECK(angles.back() == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("rng streams are deterministic and decorrelated") {
  auto a1 = make_rng(42, 1);
  auto a2 = make_rng(42, 1);
  auto b = make_rng(42, 2);
  CHECK(a1() == a2());
  CHECK(a1() != b());
}
