#pragma once

// Contraction-rate experiments: simulate data at increasing noise budgets n,
// compute posterior credible radii and tail masses, and compare the measured
// decay against the closed-form rate the configuration is entitled to.
//
// theoretical_rate() maps a scenario (operator decay class, prior family and
// hyperparameters, truth class) to its rate law and validates the pairing:
// configurations outside the supported table throw std::invalid_argument with
// an explanation of what to change.  Rate laws come in two shapes,
//
//   power:        xi_n = n^{-exponent} (log n)^{log_exponent}
//   logarithmic:  xi_n = (log n)^{-exponent}
//
// and fit_rate() regresses log median radius on the matching abscissa
// (log n after dividing out the known logarithmic factor, or log log n).

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "cbench/posterior.hpp"
#include "cbench/priors.hpp"
#include "cbench/sequence.hpp"
#include "cbench/spectral.hpp"

namespace cbench {

struct TruthSpec {
  enum class Kind { finite_series, sobolev, holder };
  Kind kind = Kind::finite_series;
  double gamma = 1.0;           // smoothness (sobolev / holder)
  double scale = 1.0;
  std::vector<double> coeffs;   // finite_series: leading coefficients

  // Coefficient sequence in the singular basis.  The Sobolev representative
  // f_k = scale * k^{-gamma-0.51} lies in H^s exactly for s < gamma + 0.01;
  // the Holder representative has wavelet coefficients of alternating sign
  // sitting on the boundary of the smoothness ball at every level.
  SequenceVector realize(Eigen::Index K_max) const;
};

struct TheoreticalRate {
  enum class Model { power, logarithmic };
  Model model = Model::power;
  double exponent = 0.0;
  double log_exponent = 0.0;  // power model only
  std::string law;            // regime identifier, e.g. "sieve-mild-sobolev"
  std::string note;           // caveats (unquantified subpolynomial factors etc.)
};

// Evaluate the rate at a given n.
double rate_value(const TheoreticalRate& rate, double n);

struct RateScenario {
  OperatorKind op_kind = OperatorKind::identity;
  OperatorParams op_params;
  Eigen::Index K_max = 100;
  AnyPrior prior = GaussianPriorSpec{};
  TruthSpec truth;
  std::vector<double> n_grid;
  Eigen::Index replicates = 8;
  double credibility_tail = 0.1;        // tail mass left outside the radius
  double mass_radius_multiplier = 1.0;  // ball radius M * xi_n for tail masses
  McmcConfig mcmc;                      // ignored by the conjugate family
  std::uint64_t seed = 1;
  int threads = 0;                      // 0 = hardware concurrency

  void validate() const;
};

TheoreticalRate theoretical_rate(const RateScenario& scenario);

// Resolution level for plug-in tests: k_n ~ n xi_n^2 for polynomial decay,
// k_n ~ (a log n)^{1/beta} with a = 0.4 / c0 (so that the deepest retained
// singular value is still polynomially large) for exponential decay.
Eigen::Index resolution_schedule(const IllPosedness& cls,
                                 const TheoreticalRate& rate, double n);

struct RateRow {
  double n = 0.0;
  Eigen::Index replicate = 0;
  double radius = 0.0;        // credible radius at the configured tail
  double mass_outside = 0.0;  // posterior mass outside the M xi_n ball
  double mass_se = 0.0;
  double runtime_sec = 0.0;
};

struct RateTable {
  std::vector<RateRow> rows;  // ordered by (n grid position, replicate)
  TheoreticalRate law;
};

// Run the full grid.  Rows are bit-for-bit reproducible for a fixed seed
// (excluding the runtime column); replicates are farmed out to a thread pool
// with per-task random substreams.
RateTable run_experiment(const RateScenario& scenario);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double measured_exponent = 0.0;     // -slope
  double theoretical_exponent = 0.0;
  TheoreticalRate::Model model = TheoreticalRate::Model::power;
  std::string law;
  double tolerance = 0.0;
  bool within_tolerance = false;
};

// OLS fit of log median radius against log n (power laws, after subtracting
// the known log_exponent * log log n term) or log log n (logarithmic laws).
RateFit fit_rate(const RateTable& table, double tolerance);

}  // namespace cbench
