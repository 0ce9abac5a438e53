#pragma once

// Posterior computation for the sequence-space white noise model.
//
// The log likelihood of a coefficient vector f given data y at noise level
// 1/sqrt(n) is, up to an f-free constant,
//
//     l(f) = n sum_k rho_k f_k y_k - (n/2) sum_k rho_k^2 f_k^2.
//
// Gaussian priors are conjugate coordinatewise; the sieve and uniform
// wavelet priors are sampled by Markov chains.  All distances downstream
// are l2 on coordinates (the norm of the hypothesis space).

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "cbench/priors.hpp"
#include "cbench/sequence.hpp"
#include "cbench/spectral.hpp"

namespace cbench {

double log_likelihood(const SequenceVector& f, const Observation& obs,
                      const SpectralOperator& op);

// Coordinatewise Gaussian posterior
//   v_k = tau_k^2 / (1 + n rho_k^2 tau_k^2),
//   m_k = n rho_k tau_k^2 y_k / (1 + n rho_k^2 tau_k^2).
struct ConjugatePosterior {
  Eigen::ArrayXd mean;
  Eigen::ArrayXd var;
  double n = 0.0;

  Eigen::ArrayXd draw(Engine& eng) const;
};

ConjugatePosterior conjugate_posterior(const GaussianPriorSpec& prior,
                                       const Observation& obs,
                                       const SpectralOperator& op);

struct McmcConfig {
  Eigen::Index iterations = 20000;
  Eigen::Index burn_in = 5000;    // also the adaptation window
  Eigen::Index thin = 1;
  double birth_death_prob = 0.3;  // sieve dimension-move probability
  double radius_move_prob = 0.2;  // wavelet radius-move probability
  double target_accept = 0.3;     // random-walk adaptation target
  std::uint64_t seed = 1;

  void validate() const;
};

struct PosteriorChain {
  // Kept (post burn-in, thinned) samples.  coords holds SVD-basis
  // coordinates; model_index holds the sieve truncation M or the wavelet
  // radius R of each sample; latent holds the raw wavelet uniforms.
  std::vector<int> model_index;
  std::vector<Eigen::ArrayXd> coords;
  std::vector<Eigen::ArrayXd> latent;
  std::vector<double> log_likelihoods;

  // Acceptance rates by move type; negative when a move type never fired.
  double accept_within = -1.0;
  double accept_birth = -1.0;
  double accept_death = -1.0;
  double accept_radius = -1.0;

  Eigen::Index iterations = 0, burn_in = 0, thin = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  Eigen::Index sample_count() const { return static_cast<Eigen::Index>(coords.size()); }
};

// Reversible-jump sampler for the sieve prior.  Within-model moves are
// coordinatewise random walks with step sizes adapted toward target_accept
// during burn-in and frozen afterwards; dimension moves propose birth from
// the prior marginal of the new coordinate (so its density cancels and the
// Jacobian is 1) or death of the top coordinate.
PosteriorChain rjmcmc_sieve_posterior(const SievePriorSpec& prior,
                                      const Observation& obs,
                                      const SpectralOperator& op,
                                      const McmcConfig& cfg);

// Metropolis sampler for the uniform wavelet prior: coordinatewise random
// walks on the latent uniforms plus an integer random walk on the radius.
// The observation operator must use the Fourier pair layout.
PosteriorChain wavelet_posterior_mcmc(const WaveletPriorSpec& prior,
                                      const Observation& obs,
                                      const SpectralOperator& op,
                                      const McmcConfig& cfg);

struct MassEstimate {
  double estimate = 0.0;
  double std_error = 0.0;  // nominal binomial standard error
};

// Posterior mass of { f : ||f - f0||_2 >= radius }.
MassEstimate posterior_mass_outside(const ConjugatePosterior& post,
                                    const SequenceVector& f0, double radius,
                                    Eigen::Index draws = 4000,
                                    std::uint64_t seed = 7);
MassEstimate posterior_mass_outside(const PosteriorChain& chain,
                                    const SequenceVector& f0, double radius);

// Smallest radius containing posterior mass 1 - tau around f0, computed as
// the nearest-rank (1-tau) quantile of the sampled distances ||f - f0||_2.
double contraction_radius(const ConjugatePosterior& post, const SequenceVector& f0,
                          double tau, Eigen::Index draws = 4000,
                          std::uint64_t seed = 7);
double contraction_radius(const PosteriorChain& chain, const SequenceVector& f0,
                          double tau);

}  // namespace cbench
