#include <doctest.h>

#include "revmix/limit_maps.hpp"
#include "test_support.hpp"

using namespace revmix;
using revmix_test::random_points;

TEST_CASE("henon map basics") {
  CHECK(max_norm(henon_apply({0, 0}, {0, 0})) == 0.0);

  const HenonParams hp{1.0, -0.5};
  const auto fps = henon_fixed_points(hp);
  REQUIRE(fps.size() == 2);
  CHECK(fps[0].x == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(fps[1].x == doctest::Approx(-2.0).epsilon(1e-14));
  for (const Point2& p : fps) CHECK(distance(henon_apply(hp, p), p) < 1e-13);

  for (const Point2& p : random_points({{-3, -3}, {3, 3}}, 500, 61u))
    CHECK(std::abs(henon_jacobian(hp, p).det() + hp.M2) < 1e-15);

  for (const Point2& p : random_points({{-2, -2}, {2, 2}}, 200, 67u)) {
    const auto back = henon_inverse(hp, henon_apply(hp, p));
    REQUIRE(back.has_value());
    CHECK(distance(*back, p) < 1e-12);
  }
  CHECK_FALSE(henon_inverse({1.0, 0.0}, {0, 0}).has_value());
}

TEST_CASE("product map is symplectic and reversible") {
  std::mt19937_64 rng(71u);
  std::uniform_real_distribution<double> uc(0.1, 3.0), um(-3.0, 3.0), sgn(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const double ct = (sgn(rng) < 0.5 ? -1 : 1) * uc(rng);
    const ProductHenonParams hp{ct, um(rng)};
    for (const Point2& p : random_points({{-3, -3}, {3, 3}}, 500, 73u + trial)) {
      CHECK(std::abs(h_jacobian(hp, p).det() - 1.0) < 1e-10);
      const Point2 hrh = h_apply(hp, {h_apply(hp, p).y, h_apply(hp, p).x});
      CHECK(distance(hrh, {p.y, p.x}) < 1e-9);
    }
  }
}

TEST_CASE("product map fixed points and inverse") {
  SUBCASE("origin is fixed when Mt = 0") {
    const ProductHenonParams hp{-1.7, 0.0};
    CHECK(max_norm(h_apply(hp, {0, 0})) == 0.0);
  }
  SUBCASE("ct=-1, Mt=0: symmetric points at 0 and -2, trace 14 at the saddle") {
    const ProductHenonParams hp{-1.0, 0.0};
    const auto fps = h_symmetric_fixed_points(hp);
    REQUIRE(fps.size() == 2);
    CHECK(fps[0].x == doctest::Approx(0.0));
    CHECK(fps[1].x == doctest::Approx(-2.0));
    CHECK(h_symmetric_trace(hp, -2.0) == doctest::Approx(14.0));
  }
  SUBCASE("ct=-1, Mt=-0.5: elliptic/saddle pair with known traces") {
    const ProductHenonParams hp{-1.0, -0.5};
    const auto fps = h_symmetric_fixed_points(hp);
    REQUIRE(fps.size() == 2);
    const double upper = -1.0 + std::sqrt(0.5), lower = -1.0 - std::sqrt(0.5);
    CHECK(fps[0].x == doctest::Approx(upper).epsilon(1e-14));
    CHECK(fps[1].x == doctest::Approx(lower).epsilon(1e-14));
    CHECK(h_symmetric_trace(hp, upper) == doctest::Approx(-1.65685424949238).epsilon(1e-12));
    CHECK(h_symmetric_trace(hp, lower) == doctest::Approx(9.65685424949238).epsilon(1e-12));
    // Oracle: the analytic Jacobian's trace at the fixed points.
    CHECK(h_jacobian(hp, fps[0]).trace() == doctest::Approx(h_symmetric_trace(hp, upper)));
    CHECK(h_jacobian(hp, fps[1]).trace() == doctest::Approx(h_symmetric_trace(hp, lower)));
  }
  SUBCASE("on the fold curve: one parabolic point") {
    const ProductHenonParams hp{-1.0, -1.0};
    const auto fps = h_symmetric_fixed_points(hp);
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].x == doctest::Approx(-1.0));
    CHECK(h_symmetric_trace(hp, -1.0) == doctest::Approx(2.0));
  }
  SUBCASE("below the fold: empty") {
    CHECK(h_symmetric_fixed_points({-1.0, -1.2}).empty());
  }
  SUBCASE("inverse round trips and equals swap H swap") {
    const ProductHenonParams hp{-1.0, 0.2};
    const Point2 p{0.3, -0.7};
    CHECK(distance(h_inverse(hp, h_apply(hp, p)), p) < 1e-12);
    for (const Point2& q : random_points({{-2, -2}, {2, 2}}, 200, 79u)) {
      const Point2 lhs = h_inverse(hp, q);
      const Point2 swapped = h_apply(hp, {q.y, q.x});
      CHECK(distance(lhs, {swapped.y, swapped.x}) < 1e-10);
    }
    for (const Point2& fp : h_symmetric_fixed_points(hp))
      CHECK(distance(h_inverse(hp, fp), fp) < 1e-12);
  }
}

TEST_CASE("asymmetric fixed points sit on x + y = 1 - ct beyond the pitchfork") {
  const double ct = -0.5;
  CHECK(h_asymmetric_fixed_points({ct, 1.0}).empty());  // below PF = 1.6875
  const ProductHenonParams hp{ct, 2.0};
  const auto ap = h_asymmetric_fixed_points(hp);
  REQUIRE(ap.size() == 2);
  for (const Point2& p : ap) {
    CHECK(p.x + p.y == doctest::Approx(1.0 - ct).epsilon(1e-13));
    CHECK(distance(h_apply(hp, p), p) < 1e-12);
  }
  CHECK(ap[0].x == doctest::Approx(ap[1].y).epsilon(1e-13));  // swap couple
}

TEST_CASE("printed curve values") {
  CHECK(curve_value(CurveId::F0, LimitFamily::productH, -1.0) == doctest::Approx(-1.0));
  CHECK(curve_value(CurveId::PD2, LimitFamily::productH, -1.0) == doctest::Approx(0.0));
  CHECK(curve_value(CurveId::PD1, LimitFamily::productH, -0.5) == doctest::Approx(0.4375));
  CHECK(curve_value(CurveId::PF, LimitFamily::productH, -0.5) == doctest::Approx(1.6875));
  CHECK(curve_value(CurveId::PD_asym, LimitFamily::productH, -0.5) == doctest::Approx(2.1875));
  CHECK(curve_value(CurveId::L_plus1, LimitFamily::henon, 0.0) == doctest::Approx(-0.25));
  CHECK(curve_value(CurveId::L_minus1, LimitFamily::henon, -0.5) == doctest::Approx(0.1875));
  CHECK(curve_value(CurveId::F0, LimitFamily::productH, 0.5, Orientation::nonorientable) ==
        doctest::Approx(-0.0625));
}

TEST_CASE("curve preconditions") {
  CHECK_THROWS_AS((void)curve_value(CurveId::PD_asym, LimitFamily::productH, 0.5,
                                    Orientation::nonorientable),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)curve_value(CurveId::F0, LimitFamily::productH, 0.5,
                                    Orientation::orientable),
                  std::invalid_argument);  // wrong half-line
  CHECK_THROWS_AS((void)curve_value(CurveId::F0, LimitFamily::henon, -0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)curve_value(CurveId::L_plus1, LimitFamily::productH, -0.5),
                  std::invalid_argument);
}

TEST_CASE("derived fold/flip loci") {
  SUBCASE("Henon: derivation and print differ by the sign of M2") {
    for (double M2 : {-0.25, -0.5, -0.75}) {
      CHECK(derived_fold(LimitFamily::henon, M2) ==
            doctest::Approx(curve_value(CurveId::L_plus1, LimitFamily::henon, -M2)));
      CHECK(derived_flip(LimitFamily::henon, M2) ==
            doctest::Approx(curve_value(CurveId::L_minus1, LimitFamily::henon, -M2)));
      CHECK(derived_fold(LimitFamily::henon, M2) !=
            curve_value(CurveId::L_plus1, LimitFamily::henon, M2));
    }
  }
  SUBCASE("product family: derivation reproduces the printed curves exactly") {
    for (double ct : {-0.4, -1.0, -2.3}) {
      CHECK(derived_fold(LimitFamily::productH, ct) ==
            doctest::Approx(curve_value(CurveId::F0, LimitFamily::productH, ct)).epsilon(1e-15));
      const auto [f1, f2] = derived_symmetric_flips(ct);
      CHECK(f1 == doctest::Approx(curve_value(CurveId::PD2, LimitFamily::productH, ct))
                      .epsilon(1e-13));
      CHECK(f2 == doctest::Approx(curve_value(CurveId::PD1, LimitFamily::productH, ct))
                      .epsilon(1e-13));
    }
  }
  SUBCASE("fold curve is exactly the symmetric-root transition") {
    for (double ct : {-0.5, -1.5}) {
      const double f0 = curve_value(CurveId::F0, LimitFamily::productH, ct);
      CHECK(h_symmetric_fixed_points({ct, f0 - 1e-12}).empty());
      CHECK(h_symmetric_fixed_points({ct, f0 + 1e-12}).size() == 2);
    }
  }
  SUBCASE("flip curves carry multiplier -1 at the predicted point") {
    for (double ct : {-0.5, -2.0}) {
      const double x_pd2 = -(ct + 1.0) / 2.0;
      const double pd2 = curve_value(CurveId::PD2, LimitFamily::productH, ct);
      // x_pd2 solves the fixed-point quadratic at Mt = PD2 and has trace -2.
      CHECK(x_pd2 * x_pd2 + (1 - ct) * x_pd2 - pd2 == doctest::Approx(0.0).epsilon(1e-14));
      CHECK(h_symmetric_trace({ct, pd2}, x_pd2) == doctest::Approx(-2.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("ProductHenonParams rejects ct = 0") {
  CHECK_THROWS_AS(ProductHenonParams(0.0, 1.0), std::invalid_argument);
}
