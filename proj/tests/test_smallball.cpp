// Small-ball machinery: Monte Carlo ball mass, the two-term concentration
// function (approximation term against a hand-solved multiplier, centered
// term against erf in one dimension), the closed-form centered floor, and
// the explicit RKHS ellipsoid cover.

#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "cbench/rng.hpp"
#include "cbench/smallball.hpp"
#include "cbench/spectral.hpp"
#include "cbench/stats.hpp"

using namespace cbench;

namespace {

GaussianPriorSpec gprior(double delta, Eigen::Index K) {
  GaussianPriorSpec g;
  g.delta = delta;
  g.K_max = K;
  return g;
}

}  // namespace

TEST_CASE("smallball_mc: saturated and empty balls, determinism") {
  auto op = make_operator(OperatorKind::identity, {}, 3);
  auto prior = gprior(1.0, 3);
  SequenceVector f0(Eigen::ArrayXd::Zero(3));

  auto wide = smallball_mc(AnyPrior{prior}, op, f0, 10.0, 500, 1);
  CHECK(wide.estimate == 1.0);
  CHECK(!wide.zero_hits);
  CHECK(wide.cp_upper == 1.0);
  CHECK(wide.std_error == 0.0);
  CHECK(wide.draws == 500);
  // identity is mild(0): the weak event is the same l2 ball.
  CHECK(wide.weak_estimate == 1.0);

  auto empty = smallball_mc(AnyPrior{prior}, op, f0, 1e-8, 400, 1);
  CHECK(empty.estimate == 0.0);
  CHECK(empty.zero_hits);
  // 95% Clopper-Pearson upper for zero hits: 1 - 0.05^{1/N}.
  CHECK(empty.cp_upper ==
        doctest::Approx(1.0 - std::pow(0.05, 1.0 / 400.0)).epsilon(1e-10));

  auto a = smallball_mc(AnyPrior{prior}, op, f0, 0.7, 2000, 5);
  auto b = smallball_mc(AnyPrior{prior}, op, f0, 0.7, 2000, 5);
  CHECK(a.estimate == b.estimate);
  CHECK(a.estimate > 0.0);
  CHECK(a.estimate < 1.0);
  CHECK(a.std_error > 0.0);
  CHECK(a.cp_upper > a.estimate);

  SUBCASE("severe operators report no weak estimate") {
    OperatorParams sp;
    sp.beta = 1.0;
    sp.c0 = 1.0;
    auto sop = make_operator(OperatorKind::severe_exp, sp, 3);
    auto est = smallball_mc(AnyPrior{prior}, sop, f0, 0.5, 200, 2);
    CHECK(std::isnan(est.weak_estimate));
  }

  SUBCASE("sieve priors run through the same entry point") {
    SievePriorSpec sv;
    sv.h = TruncationPmf::exponential(1.0);
    sv.q = CoefficientDensity::gaussian();
    sv.tau = TauSchedule::constant(1.0);
    sv.K_max = 3;
    auto est = smallball_mc(AnyPrior{sv}, op, f0, 1.0, 1000, 3);
    CHECK(est.estimate > 0.0);
    CHECK(est.estimate < 1.0);
  }

  CHECK_THROWS_AS(smallball_mc(AnyPrior{prior}, op, f0, 0.0, 100, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(smallball_mc(AnyPrior{prior}, op, f0, 1.0, 0, 1),
                  std::invalid_argument);
  SequenceVector short_f0(Eigen::ArrayXd::Zero(2));
  CHECK_THROWS_AS(smallball_mc(AnyPrior{prior}, op, short_f0, 1.0, 100, 1),
                  std::invalid_argument);
}

TEST_CASE("concentration: approximation term solves the multiplier equation") {
  // Identity operator, delta = 1/2: s_1 = 2^{-1}.  With b = (2, 0, ...) and
  // eps = 1 the residual equation forces 1 + nu s_1 = 2, so nu = 2 and the
  // approximation term is b_1^2 s_1 nu^2 / (1 + nu s_1)^2 = 1/s_1 = 2.
  auto op = make_operator(OperatorKind::identity, {}, 6);
  auto prior = gprior(0.5, 6);
  Eigen::ArrayXd b = Eigen::ArrayXd::Zero(6);
  b[0] = 2.0;

  auto res = concentration_function(prior, op, b, 1.0, CenteredMode::mc, 20000, 1);
  CHECK(res.nu == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(res.approx_term == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(res.value == doctest::Approx(res.approx_term + res.centered_term)
                         .epsilon(1e-14));

  SUBCASE("centre already inside the ball: zero approximation term") {
    Eigen::ArrayXd small = Eigen::ArrayXd::Zero(6);
    small[0] = 0.5;
    auto r0 = concentration_function(prior, op, small, 1.0, CenteredMode::mc,
                                     5000, 1);
    CHECK(r0.approx_term == 0.0);
    CHECK(r0.nu == 0.0);
  }
}

TEST_CASE("concentration: centered Monte Carlo matches erf in one dimension") {
  // K = 1, identity, delta = 1/2: P(s z^2 < eps^2) = 2 Phi(eps / sqrt(s)) - 1
  // with s = 1/2; at eps = 0.4 that is 0.4283923550466684.
  auto op = make_operator(OperatorKind::identity, {}, 1);
  auto prior = gprior(0.5, 1);
  Eigen::ArrayXd b = Eigen::ArrayXd::Zero(1);

  auto res = concentration_function(prior, op, b, 0.4, CenteredMode::mc,
                                    200000, 3);
  CHECK(res.approx_term == 0.0);
  const double p = std::exp(-res.centered_term);
  CHECK(std::abs(p - 0.4283923550466684) < 4.5e-3);  // ~4 binomial sigmas
  CHECK(!res.centered_mc_zero_hits);

  SUBCASE("zero hits fall back to the Clopper-Pearson floor") {
    auto tiny = concentration_function(prior, op, b, 1e-9, CenteredMode::mc,
                                       500, 3);
    CHECK(tiny.centered_mc_zero_hits);
    CHECK(std::exp(-tiny.centered_term) ==
          doctest::Approx(1.0 - std::pow(0.05, 1.0 / 500.0)).epsilon(1e-10));
  }
}

TEST_CASE("closed-form centered floor: shape, domain, and domination") {
  CHECK(centered_smallball_prefactor() == 0.05);
  // w = 3/2, eps = 0.3: B eps^{3/4} exp(-1.5 sqrt(1.5) / eps).
  CHECK(centered_smallball_lower_bound(1.5, 0.3) ==
        doctest::Approx(4.439266815720109e-05).epsilon(1e-12));
  CHECK(centered_smallball_lower_bound(1.5, 0.2) <
        centered_smallball_lower_bound(1.5, 0.8));
  CHECK_THROWS_AS(centered_smallball_lower_bound(0.5, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(centered_smallball_lower_bound(1.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(centered_smallball_lower_bound(1.5, 1.5), std::invalid_argument);

  SUBCASE("log form agrees where the probability is representable") {
    for (double eps : {0.05, 0.3, 0.9})
      CHECK(centered_smallball_log_lower_bound(1.5, eps) ==
            doctest::Approx(std::log(centered_smallball_lower_bound(1.5, eps)))
                .epsilon(1e-12));
    // ... and stays finite far past the underflow point of the probability
    // itself: w = 3/2, eps = 1e-4 gives exp(-18371.7...), flushed to zero.
    CHECK(centered_smallball_lower_bound(1.5, 1e-4) == 0.0);
    // log B + 0.75 log(eps) - 1.5 sqrt(1.5) / eps.
    CHECK(centered_smallball_log_lower_bound(1.5, 1e-4) ==
          doctest::Approx(std::log(0.05) + 0.75 * std::log(1e-4) -
                          1.5 * std::sqrt(1.5) * 1e4)
              .epsilon(1e-14));
    CHECK_THROWS_AS(centered_smallball_log_lower_bound(0.5, 0.3),
                    std::invalid_argument);
    CHECK_THROWS_AS(centered_smallball_log_lower_bound(1.5, 0.0),
                    std::invalid_argument);
  }

  SUBCASE("floor sits below the Monte Carlo ball mass (mild bound mode)") {
    // Identity operator (mild 0, C2 = 1), delta = 1: w = 3/2.  The bound-mode
    // centered term must dominate (be at least) the MC centered term up to
    // Monte Carlo error, i.e. the floor probability is below the truth.
    auto op = make_operator(OperatorKind::identity, {}, 6);
    auto prior = gprior(1.0, 6);
    Eigen::ArrayXd b = Eigen::ArrayXd::Zero(6);
    for (double eps : {0.3, 0.5, 0.9}) {
      auto bound = concentration_function(prior, op, b, eps, CenteredMode::bound);
      auto mc = concentration_function(prior, op, b, eps, CenteredMode::mc,
                                       200000, 11);
      CHECK(bound.mode == CenteredMode::bound);
      const double p_floor = std::exp(-bound.centered_term);
      const double p_mc = std::exp(-mc.centered_term);
      CHECK(p_floor <= p_mc + 4.0 * std::sqrt(p_mc / 200000.0));
    }
  }
}

TEST_CASE("concentration: severe bound mode reports the entropy bridge") {
  OperatorParams hp;
  hp.T = 0.1;
  auto op = make_operator(OperatorKind::heat, hp, 12);
  auto prior = gprior(1.0, 12);
  Eigen::ArrayXd b = Eigen::ArrayXd::Zero(12);
  const double eps = 0.05;
  auto res = concentration_function(prior, op, b, eps, CenteredMode::bound);
  auto cover = rkhs_cover_count(prior, op, eps / 2.0);
  CHECK(res.centered_term ==
        doctest::Approx(std::log(2.0) + cover.log_count).epsilon(1e-14));
  CHECK(res.centered_term > 0.0);
}

TEST_CASE("rkhs cover: frozen small case and brute-force covering radius") {
  auto op = make_operator(OperatorKind::identity, {}, 4);
  auto prior = gprior(0.5, 4);  // h_k = (1+k^2)^{-1/2}

  auto cover = rkhs_cover_count(prior, op, 1.5);
  CHECK(cover.J == 2);
  CHECK(cover.spacing == doctest::Approx(0.5303300858899106).epsilon(1e-14));
  REQUIRE(cover.per_dim.size() == 2);
  CHECK(cover.per_dim[0] == 3);
  CHECK(cover.per_dim[1] == 2);
  CHECK(cover.log_count == doctest::Approx(1.791759469228055).epsilon(1e-12));

  SUBCASE("every ellipsoid point sits within eps/2 of the lattice") {
    const double eps = 0.9;
    auto cv = rkhs_cover_count(prior, op, eps);
    REQUIRE(cv.J >= 1);
    Eigen::ArrayXd h(4);
    for (Eigen::Index i = 0; i < 4; ++i)
      h[i] = prior.tau_at(i + 1) * std::abs(op.rho()[i]);
    Engine eng = substream(77, 0xc0feull);
    for (int trial = 0; trial < 2000; ++trial) {
      // Random point of the ellipsoid sum (f_k / h_k)^2 <= 1, biased to the
      // boundary (the hard case).
      Eigen::ArrayXd z(4);
      for (Eigen::Index i = 0; i < 4; ++i) z[i] = draw_normal(eng);
      const double nrm = std::sqrt(z.square().sum());
      Eigen::ArrayXd f = h * z / std::max(1.0, nrm);
      // Nearest lattice point: pinned coordinates go to zero, covered ones
      // round to the nearest cell centre of [-h_i, h_i].
      double err2 = 0.0;
      for (Eigen::Index i = 0; i < 4; ++i) {
        if (i >= cv.J) {
          err2 += f[i] * f[i];
          continue;
        }
        const auto boxes = cv.per_dim[static_cast<std::size_t>(i)];
        double best = 1e300;
        for (Eigen::Index bx = 0; bx < boxes; ++bx) {
          const double centre =
              -h[i] + (static_cast<double>(bx) + 0.5) * cv.spacing;
          best = std::min(best, std::abs(f[i] - centre));
        }
        err2 += best * best;
      }
      CHECK(std::sqrt(err2) <= eps / 2.0 + 1e-12);
    }
  }

  SUBCASE("large eps pins everything") {
    auto cv = rkhs_cover_count(prior, op, 10.0);
    CHECK(cv.J == 0);
    CHECK(cv.log_count == 0.0);
  }

  SUBCASE("entropy grows as eps shrinks (severe operator)") {
    OperatorParams hp;
    hp.T = 0.1;
    auto hop = make_operator(OperatorKind::heat, hp, 20);
    auto gp = gprior(1.0, 20);
    double last = -1.0;
    Eigen::Index lastJ = 0;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
      auto c = rkhs_cover_count(gp, hop, eps);
      CHECK(c.log_count > last);
      CHECK(c.J >= lastJ);
      last = c.log_count;
      lastJ = c.J;
    }
  }

  CHECK_THROWS_AS(rkhs_cover_count(prior, op, 0.0), std::invalid_argument);
  auto mismatch = gprior(0.5, 3);
  CHECK_THROWS_AS(rkhs_cover_count(mismatch, op, 1.0), std::invalid_argument);
}

TEST_CASE("concentration: argument validation") {
  auto op = make_operator(OperatorKind::identity, {}, 3);
  auto prior = gprior(1.0, 3);
  Eigen::ArrayXd b = Eigen::ArrayXd::Zero(3);
  CHECK_THROWS_AS(
      concentration_function(prior, op, b, 0.0, CenteredMode::mc, 100, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(
      concentration_function(prior, op, b, 1.0, CenteredMode::mc, 0, 1),
      std::invalid_argument);
  Eigen::ArrayXd wrong = Eigen::ArrayXd::Zero(2);
  CHECK_THROWS_AS(
      concentration_function(prior, op, wrong, 1.0, CenteredMode::mc, 100, 1),
      std::invalid_argument);
  auto mismatch = gprior(1.0, 4);
  CHECK_THROWS_AS(
      concentration_function(mismatch, op, b, 1.0, CenteredMode::mc, 100, 1),
      std::invalid_argument);

  SUBCASE("bound mode needs a decay classification") {
    OperatorParams dp;
    dp.measure.atoms = {{0.0, 1.0}};
    auto dop = make_operator(OperatorKind::deconvolution, dp, 3);
    CHECK_THROWS_AS(
        concentration_function(prior, dop, b, 0.5, CenteredMode::bound),
        std::invalid_argument);
  }
}
