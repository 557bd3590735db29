#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"

#include "cshift/error.hpp"
#include "cshift/intensity.hpp"

using namespace cshift;
using std::numbers::pi;

namespace {

// Cap measure on S^{d-1} from Boost's incomplete beta, reflected above pi/2.
double boost_cap(double alpha, std::size_t d) {
  if (alpha > pi / 2) return 1.0 - boost_cap(pi - alpha, d);
  const double s = std::sin(alpha);
  return 0.5 * boost::math::ibeta(0.5 * (static_cast<double>(d) - 1.0), 0.5, s * s);
}

TargetPair orthogonal_targets(std::size_t d) {
  std::vector<double> t1(d, 0.0), t2(d, 0.0);
  t1[0] = 1.0;
  t2[1] = 1.0;
  return TargetPair::from_vectors(t1, t2);
}

}  // namespace

TEST_CASE("cap_fraction examples") {
  for (std::size_t d : {2u, 3u, 7u, 64u, 3072u}) CHECK(cap_fraction(pi / 2, d) == doctest::Approx(0.5));
  CHECK(cap_fraction(pi / 3, 3) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(cap_fraction(pi, 100) == doctest::Approx(1.0));
  CHECK(cap_fraction(0.0, 10) == 0.0);
  CHECK_THROWS_AS(cap_fraction(-0.1, 3), InvalidArgument);
  CHECK_THROWS_AS(cap_fraction(pi + 0.1, 3), InvalidArgument);
  CHECK_THROWS_AS(cap_fraction(1.0, 1), InvalidArgument);
}

TEST_CASE("cap_fraction closed forms and the Boost oracle") {
  for (double a = 0.0; a <= pi; a += pi / 37) {
    // On the circle a cap is an arc; on the 2-sphere its area is (1 - cos a) / 2.
    CHECK(cap_fraction(a, 2) == doctest::Approx(a / pi).epsilon(1e-12));
    CHECK(cap_fraction(a, 3) == doctest::Approx((1 - std::cos(a)) / 2).epsilon(1e-12));
    for (std::size_t d : {4u, 16u, 64u, 1000u}) {
      CHECK(std::abs(cap_fraction(a, d) - boost_cap(a, d)) <= 1e-12);
    }
  }
}

TEST_CASE("cap_fraction reflection and monotonicity") {
  for (std::size_t d : {2u, 5u, 64u}) {
    double prev = -1.0;
    for (double a = 0.0; a <= pi; a += 0.01) {
      CHECK(std::abs(cap_fraction(a, d) + cap_fraction(pi - a, d) - 1.0) <= 1e-9);
      const double c = cap_fraction(a, d);
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("ball99 radius matches the chi-square quantile") {
  for (std::size_t d : {1u, 2u, 3u, 6u, 64u, 3072u}) {
    const double want = std::sqrt(boost::math::quantile(boost::math::chi_squared(static_cast<double>(d)), 0.99));
    CHECK(ball99_radius(d) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("extend intensity closed forms") {
  const auto t3 = orthogonal_targets(3);
  const auto train3 = ShiftSpec::extend(0.0, t3);
  for (double th : {0.0, pi / 12, pi / 6, pi / 4, pi / 3, pi / 2}) {
    const double want = 1.0 - 1.0 / (1.0 + std::sin(th));
    CHECK(std::abs(intensity_analytic(train3, ShiftSpec::extend(th, t3)) - want) <= 1e-12);
  }
  CHECK(intensity_analytic(train3, ShiftSpec::extend(pi / 6, t3)) == doctest::Approx(1.0 / 3.0));

  for (std::size_t d : {2u, 16u, 64u}) {
    const auto t = orthogonal_targets(d);
    const auto train = ShiftSpec::extend(0.0, t);
    for (double th : {0.1, 0.7, 1.3}) {
      const double want = 1.0 - 0.5 / boost_cap(pi / 2 + th, d);
      CHECK(std::abs(intensity_analytic(train, ShiftSpec::extend(th, t)) - want) <= 1e-12);
    }
  }
}

TEST_CASE("extend intensity saturates in high dimension") {
  const auto t = orthogonal_targets(3072);
  const double i = intensity_analytic(ShiftSpec::extend(0.0, t), ShiftSpec::extend(pi / 6, t));
  CHECK(std::abs(i - 0.5) <= 1e-6);
}

TEST_CASE("overlap intensity is the lune fraction") {
  for (std::size_t d : {2u, 3u, 100u}) {
    const auto t = orthogonal_targets(d);
    const auto train = ShiftSpec::overlap(0.0, t);
    // Orthogonal targets: gamma = theta.
    for (double th : {0.0, pi / 8, pi / 4, pi / 2}) {
      CHECK(intensity_analytic(train, ShiftSpec::overlap(th, t)) == doctest::Approx(th / pi).epsilon(1e-14));
    }
  }
  const auto t = derive_targets(3, 10);
  const double gamma = (2.0 * 0.4 / pi) * angle_between(t.t1, t.t2);
  CHECK(intensity_analytic(ShiftSpec::overlap(0.0, t), ShiftSpec::overlap(0.4, t)) ==
        doctest::Approx(gamma / pi).epsilon(1e-14));
}

TEST_CASE("truncation intensity") {
  for (std::size_t d : {1u, 2u, 16u}) {
    const auto train = ShiftSpec::truncation(0.8, d);
    CHECK(intensity_analytic(train, ShiftSpec::truncation(0.8, d)) == 0.0);
    CHECK(intensity_analytic(train, ShiftSpec::truncation(0.5, d)) == 0.0);
    CHECK(intensity_analytic(train, ShiftSpec::truncation(1.0, d)) ==
          doctest::Approx(1.0 - std::pow(0.8, static_cast<double>(d))).epsilon(1e-13));
  }
}

TEST_CASE("intensity is monotone in the shift parameter") {
  const auto t = derive_targets(1, 16);
  double prev_e = -1.0, prev_o = -1.0, prev_t = -1.0;
  for (double th = 0.0; th <= pi / 2; th += pi / 40) {
    const double e = intensity_analytic(ShiftSpec::extend(0.0, t), ShiftSpec::extend(th, t));
    const double o = intensity_analytic(ShiftSpec::overlap(0.0, t), ShiftSpec::overlap(th, t));
    CHECK(e >= prev_e);
    CHECK(o >= prev_o);
    CHECK(e < 1.0);
    prev_e = e;
    prev_o = o;
  }
  for (double r = 0.8; r <= 1.5; r += 0.05) {
    const double v = intensity_analytic(ShiftSpec::truncation(0.8, 16), ShiftSpec::truncation(r, 16));
    CHECK(v >= prev_t);
    prev_t = v;
  }
}

TEST_CASE("intensity rejects incompatible specs") {
  const auto t = derive_targets(0, 4);
  const auto u = derive_targets(1, 4);
  CHECK_THROWS_AS(intensity_analytic(ShiftSpec::overlap(0.0, t), ShiftSpec::extend(0.1, t)), InvalidArgument);
  CHECK_THROWS_AS(intensity_analytic(ShiftSpec::overlap(0.0, t), ShiftSpec::overlap(0.1, u)), InvalidArgument);
  CHECK_THROWS_AS(intensity_analytic(ShiftSpec::truncation(1, 3), ShiftSpec::truncation(1, 4)), InvalidArgument);
  CHECK_THROWS_AS(intensity_analytic(ShiftSpec::extend(0.0, t), ShiftSpec::extend(0.1, t, ExtendTau::printed)),
                  InvalidArgument);
  CHECK_THROWS_AS(intensity_mc(ShiftSpec::truncation(1, 3), ShiftSpec::truncation(1, 3), 0, 1), InvalidArgument);
}

TEST_CASE("Monte Carlo: a spec against itself gives zero") {
  const auto t = derive_targets(2, 5);
  for (const auto& spec : {ShiftSpec::overlap(0.3, t), ShiftSpec::extend(0.2, t), ShiftSpec::truncation(0.9, 5)}) {
    const auto r = intensity_mc(spec, spec, 100000, 4);
    CHECK(r.mc_estimate == 0.0);
    CHECK(r.mc_hits == 100000);
  }
}

TEST_CASE("Monte Carlo agrees with the analytic value") {
  SUBCASE("overlap gamma=pi/2 at d=3 and d=100") {
    for (std::size_t d : {3u, 100u}) {
      const auto t = orthogonal_targets(d);
      const auto r = intensity_mc(ShiftSpec::overlap(0.0, t), ShiftSpec::overlap(pi / 2, t), 200000, 1);
      CHECK(std::abs(r.mc_estimate - 0.5) <= 4 * r.mc_stderr);
      CHECK(r.consistent());
    }
  }
  SUBCASE("extend theta=pi/6 at d=3") {
    const auto t = orthogonal_targets(3);
    const auto r = intensity_mc(ShiftSpec::extend(0.0, t), ShiftSpec::extend(pi / 6, t), 200000, 2);
    CHECK(std::abs(r.mc_estimate - 1.0 / 3.0) <= 4 * r.mc_stderr);
  }
  SUBCASE("truncation d=1") {
    const auto r = intensity_mc(ShiftSpec::truncation(0.8, 1), ShiftSpec::truncation(1.0, 1), 200000, 3);
    CHECK(std::abs(r.mc_estimate - 0.2) <= 4 * r.mc_stderr);
    CHECK(r.acceptance_rate == 1.0);
  }
}

TEST_CASE("Monte Carlo does not depend on the thread count") {
  const auto t = derive_targets(8, 6);
  const auto a = intensity_mc(ShiftSpec::extend(0.0, t), ShiftSpec::extend(0.5, t), 30000, 9, {.threads = 1});
  const auto b = intensity_mc(ShiftSpec::extend(0.0, t), ShiftSpec::extend(0.5, t), 30000, 9, {.threads = 4});
  CHECK(a.mc_hits == b.mc_hits);
  CHECK(a.mc_estimate == b.mc_estimate);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  const auto c = intensity_mc(ShiftSpec::extend(0.0, t), ShiftSpec::extend(0.5, t), 30000, 10, {.threads = 1});
  CHECK(c.mc_hits != a.mc_hits);
}

TEST_CASE("tiny caps trip the acceptance floor") {
  const auto t = orthogonal_targets(64);
  // Printed tau shrinks the cap to radius pi/2 - theta.
  const auto train = ShiftSpec::extend(0.0, t, ExtendTau::printed);
  const auto shift = ShiftSpec::extend(pi / 2 - 0.05, t, ExtendTau::printed);
  CHECK_THROWS_AS(intensity_mc(train, shift, 1000, 1), InfeasibleGeometry);
}

TEST_CASE("uniform ball sampler") {
  const auto spec = ShiftSpec::truncation(1.0, 4);
  const double r = spec.support_radius();
  std::size_t inner = 0;
  const std::size_t n = 100000;
  for (std::size_t j = 0; j < n; ++j) {
    CounterStream rng(5, 77, j);
    const auto x = sample_uniform_support(spec, rng);
    REQUIRE(norm(x) <= r * (1 + 1e-12));
    if (norm(x) <= r / 2) ++inner;
  }
  // Volume fraction of the half-radius ball is 2^-4.
  const double p = 1.0 / 16.0;
  CHECK(std::abs(static_cast<double>(inner) / n - p) <= 4 * std::sqrt(p * (1 - p) / n));
}
