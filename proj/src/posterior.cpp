#include "cbench/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cbench/wavelets.hpp"

namespace cbench {

namespace {

void check_sizes(Eigen::Index a, Eigen::Index b, const char* who) {
  if (a != b) {
    std::ostringstream os;
    os << who << ": size mismatch (" << a << " vs " << b << ")";
    throw std::invalid_argument(os.str());
  }
}

// Robbins-Monro style step-size update driven toward the target rate.
void adapt_step(double& log_step, bool accepted, double target, Eigen::Index t) {
  const double gain = 1.0 / std::sqrt(static_cast<double>(t) + 1.0);
  log_step += gain * ((accepted ? 1.0 : 0.0) - target);
  log_step = std::clamp(log_step, -23.0, 23.0);
}

double rate_or_negative(Eigen::Index accepted, Eigen::Index proposed) {
  return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed)
                      : -1.0;
}

void warn_rate(std::vector<std::string>& warnings, const char* what, double rate) {
  if (rate >= 0.0 && (rate < 0.05 || rate > 0.95)) {
    std::ostringstream os;
    os << what << " acceptance rate " << rate << " outside [0.05, 0.95]; tune steps";
    warnings.push_back(os.str());
  }
}

}  // namespace

double log_likelihood(const SequenceVector& f, const Observation& obs,
                      const SpectralOperator& op) {
  check_sizes(f.size(), op.K_max(), "log_likelihood");
  check_sizes(obs.y.size(), op.K_max(), "log_likelihood");
  if (obs.n == 0.0) return 0.0;
  const Eigen::ArrayXd rf = op.rho() * f.coeffs;
  return obs.n * (rf * obs.y).sum() - 0.5 * obs.n * rf.square().sum();
}

Eigen::ArrayXd ConjugatePosterior::draw(Engine& eng) const {
  Eigen::ArrayXd out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    out[i] = mean[i] + std::sqrt(var[i]) * draw_normal(eng);
  return out;
}

ConjugatePosterior conjugate_posterior(const GaussianPriorSpec& prior,
                                       const Observation& obs,
                                       const SpectralOperator& op) {
  prior.validate();
  check_sizes(prior.K_max, op.K_max(), "conjugate_posterior");
  check_sizes(obs.y.size(), op.K_max(), "conjugate_posterior");
  const Eigen::ArrayXd tau = prior.taus();
  const Eigen::ArrayXd tau2 = tau.square();
  const Eigen::ArrayXd denom = 1.0 + obs.n * op.rho().square() * tau2;
  ConjugatePosterior post;
  post.n = obs.n;
  post.var = tau2 / denom;
  post.mean = obs.n * op.rho() * tau2 * obs.y / denom;
  return post;
}

void McmcConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("McmcConfig: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations)
    throw std::invalid_argument("McmcConfig: need 0 <= burn_in < iterations");
  if (thin < 1) throw std::invalid_argument("McmcConfig: thin must be >= 1");
  if (birth_death_prob < 0.0 || birth_death_prob >= 1.0)
    throw std::invalid_argument("McmcConfig: birth_death_prob must be in [0, 1)");
  if (radius_move_prob < 0.0 || radius_move_prob >= 1.0)
    throw std::invalid_argument("McmcConfig: radius_move_prob must be in [0, 1)");
  if (target_accept <= 0.0 || target_accept >= 1.0)
    throw std::invalid_argument("McmcConfig: target_accept must be in (0, 1)");
}

PosteriorChain rjmcmc_sieve_posterior(const SievePriorSpec& prior,
                                      const Observation& obs,
                                      const SpectralOperator& op,
                                      const McmcConfig& cfg) {
  prior.validate();
  cfg.validate();
  check_sizes(prior.K_max, op.K_max(), "rjmcmc_sieve_posterior");
  check_sizes(obs.y.size(), op.K_max(), "rjmcmc_sieve_posterior");

  const Eigen::Index K = prior.K_max;
  const RealizedPmf pmf = prior.h.realize(K);
  const Eigen::ArrayXd tau = prior.tau.values(K);
  const Eigen::ArrayXd ny = obs.n * op.rho() * obs.y;       // d l / d f_k linear term
  const Eigen::ArrayXd nr2 = obs.n * op.rho().square();     // quadratic curvature

  Engine eng = make_engine(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Initial state from the prior.
  SieveDraw init = sample_sieve_prior(prior, eng);
  Eigen::Index M = init.truncation;
  Eigen::ArrayXd f = init.f.coeffs;

  // Per-coordinate random-walk steps, started at the Gaussian-approximation
  // posterior scale and adapted during burn-in.
  Eigen::ArrayXd log_step(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double approx_sd = 1.0 / std::sqrt(nr2[k] + 1.0 / (tau[k] * tau[k]));
    log_step[k] = std::log(2.4 * approx_sd);
  }
  Eigen::ArrayX<Eigen::Index> proposals = Eigen::ArrayX<Eigen::Index>::Zero(K);

  auto coef_logprior = [&](Eigen::Index k, double value) {
    return prior.q.log_density(value / tau[k]);
  };
  auto coef_loglik = [&](Eigen::Index k, double value) {
    return value * ny[k] - 0.5 * value * value * nr2[k];
  };
  auto birth_prob = [&](Eigen::Index m) {  // P(propose birth | dimension move at m)
    if (m <= 1) return 1.0;
    if (m >= K) return 0.0;
    return 0.5;
  };

  double loglik = 0.0;
  for (Eigen::Index k = 0; k < M; ++k) loglik += coef_loglik(k, f[k]);

  PosteriorChain chain;
  chain.iterations = cfg.iterations;
  chain.burn_in = cfg.burn_in;
  chain.thin = cfg.thin;
  chain.seed = cfg.seed;

  Eigen::Index acc_within = 0, prop_within = 0;
  Eigen::Index acc_birth = 0, prop_birth = 0;
  Eigen::Index acc_death = 0, prop_death = 0;

  for (Eigen::Index it = 0; it < cfg.iterations; ++it) {
    const bool adapting = it < cfg.burn_in;
    if (K > 1 && unif(eng) < cfg.birth_death_prob) {
      const double pb = birth_prob(M);
      const bool do_birth = unif(eng) < pb;
      if (do_birth) {
        ++prop_birth;
        const Eigen::Index k = M;  // 0-based position of the new coordinate
        const double x = prior.q.sample(eng);
        const double value = tau[k] * x;
        const double dll = coef_loglik(k, value);
        // Proposal from the prior marginal: coefficient density cancels.
        const double log_ratio = dll + pmf.log_p[M] - pmf.log_p[M - 1] +
                                 std::log(1.0 - birth_prob(M + 1)) - std::log(pb);
        if (std::log(unif(eng)) < log_ratio) {
          f[k] = value;
          ++M;
          loglik += dll;
          ++acc_birth;
        }
      } else {
        ++prop_death;
        const Eigen::Index k = M - 1;
        const double dll = -coef_loglik(k, f[k]);
        const double log_ratio = dll + pmf.log_p[M - 2] - pmf.log_p[M - 1] +
                                 std::log(birth_prob(M - 1)) -
                                 std::log(1.0 - birth_prob(M));
        if (std::log(unif(eng)) < log_ratio) {
          f[k] = 0.0;
          --M;
          loglik += dll;
          ++acc_death;
        }
      }
    } else {
      for (Eigen::Index k = 0; k < M; ++k) {
        ++prop_within;
        const double step = std::exp(log_step[k]);
        const double cand = f[k] + step * draw_normal(eng);
        const double dll = coef_loglik(k, cand) - coef_loglik(k, f[k]);
        const double dlp = coef_logprior(k, cand) - coef_logprior(k, f[k]);
        const bool accepted = std::log(unif(eng)) < dll + dlp;
        if (accepted) {
          f[k] = cand;
          loglik += dll;
          ++acc_within;
        }
        if (adapting) adapt_step(log_step[k], accepted, cfg.target_accept, proposals[k]++);
      }
    }
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
      chain.model_index.push_back(static_cast<int>(M));
      chain.coords.push_back(f);
      chain.log_likelihoods.push_back(loglik);
    }
  }

  chain.accept_within = rate_or_negative(acc_within, prop_within);
  chain.accept_birth = rate_or_negative(acc_birth, prop_birth);
  chain.accept_death = rate_or_negative(acc_death, prop_death);
  warn_rate(chain.warnings, "within-model", chain.accept_within);
  warn_rate(chain.warnings, "birth", chain.accept_birth);
  warn_rate(chain.warnings, "death", chain.accept_death);
  return chain;
}

PosteriorChain wavelet_posterior_mcmc(const WaveletPriorSpec& prior,
                                      const Observation& obs,
                                      const SpectralOperator& op,
                                      const McmcConfig& cfg) {
  prior.validate();
  cfg.validate();
  check_sizes(obs.y.size(), op.K_max(), "wavelet_posterior_mcmc");
  if (!op.paired())
    throw std::invalid_argument(
        "wavelet_posterior_mcmc: operator must use the Fourier pair layout");
  const Eigen::Index need = meyer_required_kmax(prior.J_max);
  if (op.K_max() < need) {
    std::ostringstream os;
    os << "wavelet_posterior_mcmc: level " << prior.J_max << " needs K_max >= "
       << need << ", operator has " << op.K_max();
    throw std::invalid_argument(os.str());
  }

  const Eigen::Index K = op.K_max();
  const Eigen::ArrayXd ny = obs.n * op.rho() * obs.y;
  const Eigen::ArrayXd nr2 = obs.n * op.rho().square();

  // Rows of the wavelet family over the Fourier pair coordinates, flattened
  // in latent order: scaling first, then levels breadth-first.
  const BasisMap bm = meyer_basis_map(prior.J_max);
  const Eigen::Index N = static_cast<Eigen::Index>(bm.rows.size());
  std::vector<double> weight(static_cast<std::size_t>(N), 1.0);
  std::vector<Eigen::Index> level_of(static_cast<std::size_t>(N), -1);
  {
    std::size_t r = 1;
    for (Eigen::Index l = 0; l <= prior.J_max; ++l) {
      const double wl = std::exp2(-static_cast<double>(l) * (prior.delta + 0.5));
      for (Eigen::Index k = 0; k < (Eigen::Index{1} << l); ++k, ++r) {
        weight[r] = wl;
        level_of[r] = l;
      }
    }
  }

  Engine eng = make_engine(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const bool random_radius = prior.H.kind != RadiusDistribution::Kind::point_mass;
  RealizedPmf radius_pmf;
  if (random_radius) radius_pmf = prior.H.realize();

  WaveletDraw init = sample_wavelet_prior(prior, eng);
  double R = init.radius;
  Eigen::ArrayXd u = init.latent;  // latent uniforms in row order
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(K);
  for (Eigen::Index r = 0; r < N; ++r)
    for (const auto& [i, v] : bm.rows[static_cast<std::size_t>(r)])
      f[i] += weight[static_cast<std::size_t>(r)] * u[r] * v;

  auto delta_loglik = [&](Eigen::Index r, double du) {
    // Change of the likelihood when latent r moves by du.
    double acc = 0.0;
    const double w = weight[static_cast<std::size_t>(r)];
    for (const auto& [i, v] : bm.rows[static_cast<std::size_t>(r)]) {
      const double dfi = w * du * v;
      acc += ny[i] * dfi - 0.5 * nr2[i] * (2.0 * f[i] + dfi) * dfi;
    }
    return acc;
  };
  auto apply_move = [&](Eigen::Index r, double du) {
    const double w = weight[static_cast<std::size_t>(r)];
    for (const auto& [i, v] : bm.rows[static_cast<std::size_t>(r)]) f[i] += w * du * v;
    u[r] += du;
  };

  // One adapted step size per level (plus one for the scaling coefficient).
  Eigen::ArrayXd log_step(prior.J_max + 2);
  log_step.setConstant(std::log(std::max(0.25 * R, 1e-3)));
  Eigen::ArrayX<Eigen::Index> proposals =
      Eigen::ArrayX<Eigen::Index>::Zero(prior.J_max + 2);
  auto step_slot = [&](Eigen::Index r) {
    return r == 0 ? Eigen::Index{0} : level_of[static_cast<std::size_t>(r)] + 1;
  };

  double loglik = 0.0;
  {
    SequenceVector cur(f, BasisTag::svd);
    loglik = log_likelihood(cur, obs, op);
  }

  PosteriorChain chain;
  chain.iterations = cfg.iterations;
  chain.burn_in = cfg.burn_in;
  chain.thin = cfg.thin;
  chain.seed = cfg.seed;

  Eigen::Index acc_within = 0, prop_within = 0;
  Eigen::Index acc_radius = 0, prop_radius = 0;

  for (Eigen::Index it = 0; it < cfg.iterations; ++it) {
    const bool adapting = it < cfg.burn_in;
    if (random_radius && unif(eng) < cfg.radius_move_prob) {
      ++prop_radius;
      const double Rcand = R + (unif(eng) < 0.5 ? 1.0 : -1.0);
      const Eigen::Index ri = static_cast<Eigen::Index>(R) - 1;
      const Eigen::Index rc = static_cast<Eigen::Index>(Rcand) - 1;
      if (rc >= 0 && rc < radius_pmf.p.size() && u.abs().maxCoeff() <= Rcand) {
        // Uniform latent density (2R)^{-N} changes with the radius.
        const double log_ratio = radius_pmf.log_p[rc] - radius_pmf.log_p[ri] +
                                 static_cast<double>(N) * std::log(R / Rcand);
        if (std::log(unif(eng)) < log_ratio) {
          R = Rcand;
          ++acc_radius;
        }
      }
    } else {
      for (Eigen::Index r = 0; r < N; ++r) {
        ++prop_within;
        const Eigen::Index slot = step_slot(r);
        const double du = std::exp(log_step[slot]) * draw_normal(eng);
        bool accepted = false;
        if (std::abs(u[r] + du) <= R) {
          const double dll = delta_loglik(r, du);
          if (std::log(unif(eng)) < dll) {
            apply_move(r, du);
            loglik += dll;
            accepted = true;
          }
        }
        if (adapting) adapt_step(log_step[slot], accepted, cfg.target_accept, proposals[slot]++);
      }
    }
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
      chain.model_index.push_back(static_cast<int>(R));
      chain.coords.push_back(f);
      chain.latent.push_back(u);
      chain.log_likelihoods.push_back(loglik);
    }
  }

  chain.accept_within = rate_or_negative(acc_within, prop_within);
  chain.accept_radius = rate_or_negative(acc_radius, prop_radius);
  warn_rate(chain.warnings, "within-model", chain.accept_within);
  warn_rate(chain.warnings, "radius", chain.accept_radius);
  return chain;
}

namespace {

std::vector<double> chain_distances(const PosteriorChain& chain,
                                    const SequenceVector& f0) {
  if (chain.sample_count() == 0)
    throw std::invalid_argument("posterior chain holds no samples");
  check_sizes(chain.coords.front().size(), f0.size(), "chain distances");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(chain.sample_count()));
  for (const auto& c : chain.coords)
    d.push_back(std::sqrt((c - f0.coeffs).square().sum()));
  return d;
}

std::vector<double> conjugate_distances(const ConjugatePosterior& post,
                                        const SequenceVector& f0,
                                        Eigen::Index draws, std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("posterior draws must be >= 1");
  check_sizes(post.mean.size(), f0.size(), "conjugate distances");
  Engine eng = substream(seed, 0xd157ull);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(draws));
  for (Eigen::Index i = 0; i < draws; ++i) {
    const Eigen::ArrayXd x = post.draw(eng);
    d.push_back(std::sqrt((x - f0.coeffs).square().sum()));
  }
  return d;
}

MassEstimate mass_outside(const std::vector<double>& dist, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("radius must be >= 0");
  const double N = static_cast<double>(dist.size());
  double hits = 0.0;
  for (double v : dist) hits += (v >= radius) ? 1.0 : 0.0;
  const double p = hits / N;
  return MassEstimate{p, std::sqrt(std::max(p * (1.0 - p), 0.0) / N)};
}

double nearest_rank_quantile(std::vector<double> dist, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("credibility tail tau must be in (0, 1)");
  std::sort(dist.begin(), dist.end());
  const auto N = static_cast<double>(dist.size());
  const auto rank = static_cast<std::size_t>(
      std::max(1.0, std::ceil((1.0 - tau) * N)));
  return dist[rank - 1];
}

}  // namespace

MassEstimate posterior_mass_outside(const ConjugatePosterior& post,
                                    const SequenceVector& f0, double radius,
                                    Eigen::Index draws, std::uint64_t seed) {
  return mass_outside(conjugate_distances(post, f0, draws, seed), radius);
}

MassEstimate posterior_mass_outside(const PosteriorChain& chain,
                                    const SequenceVector& f0, double radius) {
  return mass_outside(chain_distances(chain, f0), radius);
}

double contraction_radius(const ConjugatePosterior& post, const SequenceVector& f0,
                          double tau, Eigen::Index draws, std::uint64_t seed) {
  return nearest_rank_quantile(conjugate_distances(post, f0, draws, seed), tau);
}

double contraction_radius(const PosteriorChain& chain, const SequenceVector& f0,
                          double tau) {
  return nearest_rank_quantile(chain_distances(chain, f0), tau);
}

}  // namespace cbench
