#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bnepower/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace bnepower;

TEST_CASE("rayleigh_pdf closed form") {
  CHECK(rayleigh_pdf(0.0, 0.5) == 0.0);
  CHECK(rayleigh_pdf(0.5, 0.5) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-15));
  // mpmath, 30 digits: 0.54134113294645076757599797989
  CHECK(rayleigh_pdf(1.0, 0.5) == doctest::Approx(0.54134113294645076757).epsilon(1e-14));
  CHECK(rayleigh_pdf(0.5, 0.5) == doctest::Approx(1.21306131942526684721).epsilon(1e-14));
}

TEST_CASE("rayleigh_pdf rejects bad arguments") {
  CHECK_THROWS_AS(rayleigh_pdf(-0.1, 0.5), InvalidArgument);
  CHECK_THROWS_AS(rayleigh_pdf(std::nan(""), 0.5), InvalidArgument);
  CHECK_THROWS_AS(rayleigh_pdf(std::numeric_limits<double>::infinity(), 0.5), InvalidArgument);
  CHECK_THROWS_AS(rayleigh_pdf(1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(rayleigh_pdf(1.0, -1.0), InvalidArgument);
}

TEST_CASE("rayleigh_pdf integrates to one") {
  // Composite Simpson over [0, 10 R]; the tail beyond is exp(-50).
  for (double r : {0.25, 0.5, 1.7}) {
    const int n = 20000;
    const double h = 10.0 * r / n;
    double s = rayleigh_pdf(0.0, r) + rayleigh_pdf(10.0 * r, r);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * rayleigh_pdf(i * h, r);
    CHECK(std::abs(s * h / 3.0 - 1.0) < 1e-6);
  }
}

TEST_CASE("discretize_prior") {
  SUBCASE("single type") {
    const std::vector<double> levels{0.5};
    const auto p = discretize_prior(levels, 0.9);
    REQUIRE(p.size() == 1);
    CHECK(p[0] == 1.0);
  }
  SUBCASE("symmetric densities split evenly") {
    // x e^{-x^2/2} takes equal values at x and y when x e^{-x^2/2} = y e^{-y^2/2}; with
    // R = 1 the pair (0.5, y) is found by bisection on the decreasing branch.
    const double target = rayleigh_pdf(0.5, 1.0);
    double lo = 1.0, hi = 5.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (rayleigh_pdf(mid, 1.0) > target ? lo : hi) = mid;
    }
    const std::vector<double> levels{0.5, 0.5 * (lo + hi)};
    const auto p = discretize_prior(levels, 1.0);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("two levels at R = 0.5") {
    const std::vector<double> levels{0.5, 1.0};
    const auto p = discretize_prior(levels, 0.5);
    CHECK(p[0] == doctest::Approx(0.691438454036227597739).epsilon(1e-13));
    CHECK(p[1] == doctest::Approx(0.308561545963772402261).epsilon(1e-13));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(discretize_prior(std::vector<double>{}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(discretize_prior(std::vector<double>{0.5, 0.5}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(discretize_prior(std::vector<double>{0.8, 0.3}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(discretize_prior(std::vector<double>{0.0, 0.3}, 0.5), InvalidArgument);
  }
}

TEST_CASE("discretize_prior sums to one and ignores common scale") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> levels(1 + trial % 5);
    for (auto& x : levels) x = u(rng);
    std::sort(levels.begin(), levels.end());
    if (std::adjacent_find(levels.begin(), levels.end()) != levels.end()) continue;
    const double r = u(rng);
    const auto p = discretize_prior(levels, r);
    double total = 0;
    for (double x : p) {
      CHECK(x > 0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);

    // Normalizing 3x the densities by hand gives the same vector.
    std::vector<double> scaled;
    double z = 0;
    for (double g : levels) z += scaled.emplace_back(3.0 * rayleigh_pdf(g, r));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(scaled[i] / z == doctest::Approx(p[i]).epsilon(1e-12));
  }
}

TEST_CASE("sinr examples") {
  const std::vector<double> ones{1.0, 1.0};
  CHECK(sinr<double>(0, ones, std::vector<double>{0.0, 0.7}, 0.1) == 0.0);
  CHECK(sinr<double>(0, ones, std::vector<double>{0.1, 0.0}, 0.1) == doctest::Approx(1.0));
  const std::vector<double> gains{0.8, 0.4}, powers{0.5, 0.5};
  CHECK(sinr<double>(0, gains, powers, 0.1) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("sinr errors") {
  const std::vector<double> gains{1.0, 1.0};
  CHECK_THROWS_AS(sinr<double>(0, gains, std::vector<double>{0.1}, 0.1), InvalidArgument);
  CHECK_THROWS_AS(sinr<double>(0, gains, std::vector<double>{0.1, -0.1}, 0.1), InvalidArgument);
  CHECK_THROWS_AS(sinr<double>(2, gains, std::vector<double>{0.1, 0.1}, 0.1), InvalidArgument);
  CHECK_THROWS_AS(sinr<double>(0, gains, std::vector<double>{0.1, 0.1}, 0.0), InvalidArgument);
}

TEST_CASE("throughput examples") {
  const PhysicalParams params{1.0, 0.1, 0.5};
  const std::vector<double> ones{1.0, 1.0};
  CHECK(throughput(0, ones, std::vector<double>{0.0, 0.3}, params) == 0.0);
  CHECK(throughput(0, ones, std::vector<double>{0.1, 0.0}, params) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> gains{0.8, 0.4}, powers{0.5, 0.5};
  // mpmath: log2(1 + 4/3) = 1.22239242133644792598823037328
  CHECK(throughput(0, gains, powers, params) == doctest::Approx(1.22239242133644792599).epsilon(1e-14));
}

TEST_CASE("throughput monotone in own and interferer power") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const PhysicalParams params{1.0, 0.1, 0.5};
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<double> gains{u(rng), u(rng), u(rng)};
    std::vector<double> powers{u(rng), u(rng), u(rng)};
    const double base = throughput(0, gains, powers, params);
    CHECK(base > 0);
    auto up_own = powers;
    up_own[0] += 0.01;
    CHECK(throughput(0, gains, up_own, params) > base);
    auto up_other = powers;
    up_other[1 + trial % 2] += 0.01;
    CHECK(throughput(0, gains, up_other, params) < base);
    auto silent = powers;
    silent[0] = 0.0;
    CHECK(throughput(0, gains, silent, params) == 0.0);
  }
}

TEST_CASE("throughput agrees in long double") {
  const std::vector<long double> gains{0.8L, 0.4L}, powers{0.5L, 0.5L};
  const long double c = throughput<long double>(0, gains, powers, 1.0L, 0.1L);
  CHECK(static_cast<double>(c) == doctest::Approx(1.22239242133644792599).epsilon(1e-17));
}

TEST_CASE("NodeChannelProfile invariants") {
  const std::vector<double> gains{0.3, 0.8}, priors{0.2, 0.8};
  const auto p = NodeChannelProfile::with_priors(0, gains, priors, 0.5);
  CHECK(p.num_types() == 2);
  CHECK(p.prior(1) == 0.8);
  CHECK_THROWS_AS(NodeChannelProfile::with_priors(0, gains, std::vector<double>{0.3, 0.8}, 0.5), InvalidArgument);
  CHECK_THROWS_AS(NodeChannelProfile::with_priors(0, gains, std::vector<double>{0.0, 1.0}, 0.5), InvalidArgument);
  CHECK_THROWS_AS(NodeChannelProfile::with_priors(0, std::vector<double>{0.8, 0.3}, priors, 0.5), InvalidArgument);
  CHECK_THROWS_AS(NodeChannelProfile::with_priors(0, gains, priors, 0.0), InvalidArgument);

  const auto derived = NodeChannelProfile::from_gain_levels(1, std::vector<double>{0.5, 1.0}, 0.5);
  CHECK(derived.prior(0) == doctest::Approx(0.6914384540362276).epsilon(1e-13));
}

TEST_CASE("PhysicalParams validation and target SINR") {
  CHECK_NOTHROW(PhysicalParams{1.0, 0.1, 0.0}.validate());
  CHECK_THROWS_AS((PhysicalParams{0.0, 0.1, 0.5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((PhysicalParams{1.0, 0.0, 0.5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((PhysicalParams{1.0, 0.1, -0.5}.validate()), InvalidArgument);
  CHECK(PhysicalParams{1.0, 0.1, 1.0}.target_sinr() == doctest::Approx(1.0));
}
