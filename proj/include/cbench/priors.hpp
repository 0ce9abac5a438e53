#pragma once

// Prior families on coefficient sequences.
//
// Three families are provided:
//   * sieve: random truncation M ~ h, then f_k = tau_k xi_k with xi_k iid
//     from a fixed symmetric density q for k <= M and f_k = 0 beyond;
//   * Gaussian: f_k = tau_k zeta_k, zeta_k iid N(0,1), with the scale law
//     tau_k^2 = (1+k^2)^{-delta-1/2};
//   * uniform wavelet: a random sup-norm radius R ~ H, then uniform
//     coefficients u, u_{lk} ~ U(-R, R) weighted by 2^{-l(delta+1/2)}.
//
// Coefficient densities carry an explicit positivity certificate
// (D, d, w): q(x) >= D exp(-d |x|^w) for all x, with w >= 1.  The analytic
// ball bound density_ball_lower_bound() consumes exactly this certificate.

#include <Eigen/Core>
#include <cstdint>
#include <variant>
#include <vector>

#include "cbench/rng.hpp"
#include "cbench/sequence.hpp"
#include "cbench/wavelets.hpp"

namespace cbench {

// --- truncation law ---------------------------------------------------------

struct RealizedPmf {
  Eigen::ArrayXd p;       // pmf on 1..K (renormalized over the stored support)
  Eigen::ArrayXd log_p;
  double clipped_tail = 0.0;  // mass of the untruncated law beyond K

  Eigen::Index sample(Engine& eng) const;  // returns 1-based value
};

struct TruncationPmf {
  enum class Kind { exponential, stretched, table };
  Kind kind = Kind::exponential;
  double b = 1.0;       // rate: h(m) proportional to exp(-b m^power)
  double power = 1.0;   // 1 for exponential, beta+1 style laws for stretched
  std::vector<double> table;  // table kind: unnormalized weights on 1..size

  RealizedPmf realize(Eigen::Index K_max) const;

  static TruncationPmf exponential(double b);
  static TruncationPmf stretched(double b, double power);
  static TruncationPmf from_table(std::vector<double> weights);
};

// --- coefficient density ----------------------------------------------------

struct CoefficientDensity {
  enum class Family { gaussian, laplace, cauchy, custom };
  Family family = Family::gaussian;
  // Positivity certificate: q(x) >= D exp(-d |x|^w), w >= 1.
  double D = 0.0, d = 0.0, w = 1.0;
  // custom family: density samples on the symmetric grid linspace(-x_max, x_max)
  std::vector<double> table;
  double x_max = 0.0;

  double log_density(double x) const;
  double sample(Engine& eng) const;

  static CoefficientDensity gaussian();  // (D,d,w) = ((2 pi)^{-1/2}, 1/2, 2)
  static CoefficientDensity laplace();   // (1/2, 1, 1)
  static CoefficientDensity cauchy();    // (1/pi, 1, 1)
  // Tabulated density; normalizes the table, then verifies the certificate
  // on the grid and rejects it if the floor fails anywhere.
  static CoefficientDensity custom(std::vector<double> table, double x_max,
                                   double D, double d, double w);
};

// --- scale schedules --------------------------------------------------------

// tau_k = scale * (1+k^2)^{exponent} * (log(max(k,2)))^{-log_exponent}
struct TauSchedule {
  double scale = 1.0;
  double exponent = 0.0;
  double log_exponent = 0.0;

  double at(Eigen::Index k) const;  // 1-based
  Eigen::ArrayXd values(Eigen::Index K) const;

  static TauSchedule constant(double tau);
  static TauSchedule power(double exponent, double scale = 1.0);
};

// --- prior specs ------------------------------------------------------------

struct SievePriorSpec {
  TruncationPmf h;
  CoefficientDensity q;
  TauSchedule tau;
  Eigen::Index K_max = 1;

  void validate() const;
};

struct GaussianPriorSpec {
  double delta = 1.0;
  Eigen::Index K_max = 1;

  // tau_k^2 = (1+k^2)^{-delta-1/2}
  double tau_at(Eigen::Index k) const;
  Eigen::ArrayXd taus() const;
  void validate() const;
};

struct RadiusDistribution {
  enum class Kind { stretched, double_exponential, point_mass };
  Kind kind = Kind::point_mass;
  double D = 1.0, nu = 1.0;  // stretched: h(r) ~ exp(-D r^nu); double exp: exp(-e^{D r^nu})
  double B0 = 1.0;           // point mass location
  Eigen::Index r_max = 64;   // sampling support truncation for the integer laws

  RealizedPmf realize() const;  // integer kinds only
  double sample(Engine& eng) const;

  static RadiusDistribution point_mass(double B0);
  static RadiusDistribution stretched(double D, double nu, Eigen::Index r_max = 64);
  static RadiusDistribution double_exponential(double D, double nu,
                                               Eigen::Index r_max = 64);
};

struct WaveletPriorSpec {
  RadiusDistribution H;
  double delta = 1.0;
  Eigen::Index J_max = 4;

  void validate() const;
};

// --- samplers ---------------------------------------------------------------

struct SieveDraw {
  SequenceVector f;          // length K_max, zero above the truncation
  Eigen::Index truncation;   // realized M
};

struct WaveletDraw {
  WaveletCoefficients coeffs;  // weighted coefficients beta_{lk}
  Eigen::ArrayXd latent;       // raw uniforms (u, then levels in row order)
  double radius;               // realized R
};

SieveDraw sample_sieve_prior(const SievePriorSpec& spec, Engine& eng);
SequenceVector sample_gaussian_prior(const GaussianPriorSpec& spec, Engine& eng);
WaveletDraw sample_wavelet_prior(const WaveletPriorSpec& spec, Engine& eng);

// Seeded one-shot conveniences.
SieveDraw sample_sieve_prior(const SievePriorSpec& spec, std::uint64_t seed);
SequenceVector sample_gaussian_prior(const GaussianPriorSpec& spec, std::uint64_t seed);
WaveletDraw sample_wavelet_prior(const WaveletPriorSpec& spec, std::uint64_t seed);

// Analytic floor for the mass a certified density puts on a t-ball around z:
//   P(|X - z| <= t) >= 2 D t exp(-d (|z| + t)^w),
// with an extra factor pi for a cos/sin pair treated as one complex
// coordinate (area of the disc replacing the interval length).
double density_ball_lower_bound(const CoefficientDensity& q, double z, double t,
                                bool paired_coordinate = false);

// Union handed to the Monte Carlo and rate harnesses, which draw from any
// prior family through one entry point.  Wavelet draws are synthesized to
// Fourier coordinates of length K_max.
using AnyPrior = std::variant<SievePriorSpec, GaussianPriorSpec, WaveletPriorSpec>;

SequenceVector sample_prior_coords(const AnyPrior& prior, Eigen::Index K_max,
                                   Engine& eng);

}  // namespace cbench
