#include "cbench/rate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cbench/stats.hpp"
#include "cbench/wavelets.hpp"

namespace cbench {

namespace {

[[noreturn]] void reject(const std::string& what) { throw std::invalid_argument(what); }

// h must be of exponential type e^{-b m^p}; p = 1 for polynomial decay and
// p = beta + 1 for exponential decay of the singular values.
void check_truncation_tail(const TruncationPmf& h, double power,
                           const std::string& law) {
  const bool ok =
      (h.kind == TruncationPmf::Kind::exponential && std::abs(power - 1.0) < 1e-9) ||
      (h.kind == TruncationPmf::Kind::stretched && std::abs(h.power - power) < 1e-9);
  if (!ok)
    reject("theoretical_rate: " + law + " needs a truncation law with tail exp(-b m^" +
           std::to_string(power) + "); configure the matching stretched/exponential pmf");
  if (!(h.b > 0.0)) reject("theoretical_rate: truncation tail constant must be > 0");
}

double sieve_severe_delta(const SievePriorSpec& spec, const std::string& law) {
  if (spec.q.family != CoefficientDensity::Family::gaussian)
    reject("theoretical_rate: " + law + " requires the gaussian coefficient density");
  if (spec.tau.log_exponent != 0.0 || spec.tau.scale != 1.0)
    reject("theoretical_rate: " + law +
           " requires scales tau_k = (1+k^2)^{-delta/2-1/4} exactly");
  // tau exponent e = -(delta/2 + 1/4)  =>  delta = -2e - 1/2.
  return -2.0 * spec.tau.exponent - 0.5;
}

}  // namespace

SequenceVector TruthSpec::realize(Eigen::Index K_max) const {
  if (K_max <= 0) reject("TruthSpec: K_max must be > 0");
  switch (kind) {
    case Kind::finite_series: {
      if (static_cast<Eigen::Index>(coeffs.size()) > K_max)
        reject("TruthSpec: finite series longer than K_max");
      Eigen::ArrayXd f = Eigen::ArrayXd::Zero(K_max);
      for (std::size_t i = 0; i < coeffs.size(); ++i)
        f[static_cast<Eigen::Index>(i)] = coeffs[i];
      return SequenceVector(f, BasisTag::svd);
    }
    case Kind::sobolev: {
      if (!(gamma > 0.0)) reject("TruthSpec: sobolev truth needs gamma > 0");
      Eigen::ArrayXd f(K_max);
      for (Eigen::Index i = 0; i < K_max; ++i)
        f[i] = scale * std::pow(static_cast<double>(i + 1), -gamma - 0.51);
      return SequenceVector(f, BasisTag::svd);
    }
    case Kind::holder: {
      if (!(gamma > 0.0)) reject("TruthSpec: holder truth needs gamma > 0");
      Eigen::Index J = -1;
      while (meyer_required_kmax(J + 1) <= K_max) ++J;
      if (J < 0)
        reject("TruthSpec: K_max too small to hold even wavelet level 0");
      WaveletCoefficients wc;
      wc.scaling = scale;
      wc.details.reserve(static_cast<std::size_t>(J) + 1);
      for (Eigen::Index l = 0; l <= J; ++l) {
        Eigen::ArrayXd lev(Eigen::Index{1} << l);
        const double mag = scale * std::exp2(-static_cast<double>(l) * (gamma + 0.5));
        for (Eigen::Index k = 0; k < lev.size(); ++k)
          lev[k] = (k % 2 == 0 ? mag : -mag);
        wc.details.push_back(std::move(lev));
      }
      return wavelet_synthesis(wc, K_max);
    }
  }
  reject("TruthSpec: unknown kind");
}

double rate_value(const TheoreticalRate& rate, double n) {
  if (!(n > 1.0)) reject("rate_value: n must be > 1");
  if (rate.model == TheoreticalRate::Model::power)
    return std::pow(n, -rate.exponent) *
           std::pow(std::log(n), rate.log_exponent);
  return std::pow(std::log(n), -rate.exponent);
}

void RateScenario::validate() const {
  if (K_max <= 0) reject("RateScenario: K_max must be > 0");
  if (n_grid.empty()) reject("RateScenario: empty n grid");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (!(n_grid[i] > 1.0)) reject("RateScenario: every n must be > 1");
    if (i > 0 && !(n_grid[i] > n_grid[i - 1]))
      reject("RateScenario: n grid must be strictly increasing");
  }
  if (replicates <= 0) reject("RateScenario: replicates must be > 0");
  if (!(credibility_tail > 0.0 && credibility_tail < 1.0))
    reject("RateScenario: credibility_tail must be in (0,1)");
  if (!(mass_radius_multiplier > 0.0))
    reject("RateScenario: mass_radius_multiplier must be > 0");
  if (std::holds_alternative<SievePriorSpec>(prior)) {
    const auto& s = std::get<SievePriorSpec>(prior);
    s.validate();
    if (s.K_max != K_max) reject("RateScenario: sieve prior K_max mismatch");
  } else if (std::holds_alternative<GaussianPriorSpec>(prior)) {
    const auto& g = std::get<GaussianPriorSpec>(prior);
    g.validate();
    if (g.K_max != K_max) reject("RateScenario: gaussian prior K_max mismatch");
  } else {
    std::get<WaveletPriorSpec>(prior).validate();
  }
}

TheoreticalRate theoretical_rate(const RateScenario& sc) {
  sc.validate();
  const SpectralOperator op = make_operator(sc.op_kind, sc.op_params, sc.K_max);
  const IllPosedness& cls = op.classification();
  if (cls.type == IllPosedness::Type::custom)
    reject("theoretical_rate: operator has no declared polynomial/exponential decay class");
  const bool mild = cls.type == IllPosedness::Type::mild;
  const double alpha = cls.alpha;
  const double gamma = sc.truth.gamma;

  TheoreticalRate r;

  if (std::holds_alternative<SievePriorSpec>(sc.prior)) {
    const auto& spec = std::get<SievePriorSpec>(sc.prior);
    if (sc.truth.kind == TruthSpec::Kind::holder)
      reject("theoretical_rate: Holder truths pair with the uniform wavelet prior");
    if (mild) {
      check_truncation_tail(spec.h, 1.0, "the polynomial-decay sieve law");
      if (sc.truth.kind == TruthSpec::Kind::finite_series) {
        r = {TheoreticalRate::Model::power, 0.5, alpha + 0.5, "sieve-mild-finite", ""};
      } else {
        // Scale law constraints: tau_k >= B (1+k^2)^{-gamma0/2} (log k)^{-1/w}
        // with gamma0 <= gamma, and tau_k <= B' (1+k^2)^{(alpha+1)/2}.
        if (spec.tau.exponent < -gamma / 2.0 - 1e-12 ||
            spec.tau.exponent > (alpha + 1.0) / 2.0 + 1e-12)
          reject("theoretical_rate: sieve scale exponent must lie in "
                 "[-gamma/2, (alpha+1)/2]");
        if (spec.tau.log_exponent < 0.0 ||
            spec.tau.log_exponent > 1.0 / spec.q.w + 1e-12)
          reject("theoretical_rate: sieve scale log-decay must lie in [0, 1/w]");
        const double e = gamma / (2.0 * alpha + 2.0 * gamma + 1.0);
        const double eta = (2.0 * alpha + 1.0) * (alpha + gamma) /
                           (2.0 * alpha + 2.0 * gamma + 1.0);
        r = {TheoreticalRate::Model::power, e, eta, "sieve-mild-sobolev", ""};
      }
    } else {
      check_truncation_tail(spec.h, cls.beta + 1.0, "the exponential-decay sieve law");
      if (sc.truth.kind == TruthSpec::Kind::finite_series) {
        r = {TheoreticalRate::Model::power, 0.5, 0.0, "sieve-severe-finite",
             "true radius carries an unquantified subpolynomial factor "
             "exp(c (log n)^{beta/(beta+1)}); slope comparisons are approximate"};
      } else {
        const double delta = sieve_severe_delta(spec, "the exponential-decay sieve law");
        if (!(delta > cls.beta / 2.0))
          reject("theoretical_rate: need prior smoothness delta > beta/2 "
                 "(prior must oversmooth by half the ill-posedness)");
        const double e = std::min(delta - cls.beta / 2.0, gamma) / cls.beta;
        r = {TheoreticalRate::Model::logarithmic, e, 0.0, "sieve-severe-sobolev", ""};
      }
    }
  } else if (std::holds_alternative<GaussianPriorSpec>(sc.prior)) {
    const double delta = std::get<GaussianPriorSpec>(sc.prior).delta;
    // A finite series lies in every Sobolev class; a Holder function of
    // index gamma embeds into the Sobolev scale at any s < gamma.
    const bool finite = sc.truth.kind == TruthSpec::Kind::finite_series;
    if (mild) {
      const double num = finite ? delta : std::min(delta, gamma);
      r = {TheoreticalRate::Model::power, num / (2.0 * alpha + 2.0 * delta + 1.0),
           0.0, "gaussian-mild",
           finite ? "finite-series truth: smoothness bound inactive" : ""};
    } else {
      if (!(delta > cls.beta / 2.0))
        reject("theoretical_rate: need prior smoothness delta > beta/2 "
               "(prior must oversmooth by half the ill-posedness)");
      const double num =
          finite ? delta - cls.beta / 2.0 : std::min(delta - cls.beta / 2.0, gamma);
      r = {TheoreticalRate::Model::logarithmic, num / cls.beta, 0.0,
           "gaussian-severe",
           finite ? "finite-series truth: smoothness bound inactive" : ""};
    }
    if (sc.truth.kind == TruthSpec::Kind::holder)
      r.note = "Holder truth embedded into the Sobolev scale at its own index";
  } else {
    const auto& spec = std::get<WaveletPriorSpec>(sc.prior);
    if (!mild)
      reject("theoretical_rate: the uniform wavelet prior is analysed only for "
             "polynomially decaying singular values");
    if (!op.paired())
      reject("theoretical_rate: the uniform wavelet prior needs a paired "
             "(cos/sin) operator layout");
    if (sc.truth.kind != TruthSpec::Kind::holder)
      reject("theoretical_rate: the uniform wavelet prior is analysed for "
             "Holder truths");
    const double delta = spec.delta;
    const double eta = (2.0 * alpha + 1.0) * (alpha + gamma) /
                       (2.0 * alpha + 2.0 * gamma + 1.0);
    switch (spec.H.kind) {
      case RadiusDistribution::Kind::point_mass: {
        if (delta < gamma - 1e-12) {
          r = {TheoreticalRate::Model::power,
               delta / (2.0 * alpha + 2.0 * delta + 1.0), 0.0,
               "wavelet-mild-uniform", "fixed radius, prior undersmooths"};
        } else if (std::abs(delta - gamma) <= 1e-12) {
          r = {TheoreticalRate::Model::power,
               gamma / (2.0 * alpha + 2.0 * gamma + 1.0), eta,
               "wavelet-mild-uniform", "fixed radius, matched smoothness"};
        } else {
          reject("theoretical_rate: no posterior consistency: with a fixed radius "
                 "the prior support excludes rougher truths (delta > gamma)");
        }
        break;
      }
      case RadiusDistribution::Kind::stretched: {
        const double inv_nu = 1.0 / spec.H.nu;
        if (!(delta - inv_nu > 0.0))
          reject("theoretical_rate: need nu > 1/delta so the effective smoothness "
                 "delta - 1/nu stays positive");
        if (delta < gamma + inv_nu - 1e-12) {
          const double s = delta - inv_nu;
          r = {TheoreticalRate::Model::power, s / (2.0 * alpha + 2.0 * s + 1.0),
               0.0, "wavelet-mild-uniform",
               "stretched radius tail costs 1/nu smoothness"};
        } else if (std::abs(delta - (gamma + inv_nu)) <= 1e-12) {
          r = {TheoreticalRate::Model::power,
               gamma / (2.0 * alpha + 2.0 * gamma + 1.0), eta,
               "wavelet-mild-uniform", "matched smoothness after the 1/nu penalty"};
        } else {
          reject("theoretical_rate: unsupported pairing: delta > gamma + 1/nu "
                 "(thin the radius tail or lower delta)");
        }
        break;
      }
      case RadiusDistribution::Kind::double_exponential: {
        if (delta > gamma + 1e-12)
          reject("theoretical_rate: double-exponential radius law is analysed "
                 "for delta <= gamma");
        const double etap = (2.0 * alpha + 1.0) *
                            std::max(alpha + delta, 1.0 / spec.H.nu) /
                            (2.0 * alpha + 2.0 * delta + 1.0);
        r = {TheoreticalRate::Model::power,
             delta / (2.0 * alpha + 2.0 * delta + 1.0), etap,
             "wavelet-mild-uniform", "double-exponential radius tail"};
        break;
      }
    }
  }
  return r;
}

Eigen::Index resolution_schedule(const IllPosedness& cls,
                                 const TheoreticalRate& rate, double n) {
  if (!(n > 1.0)) reject("resolution_schedule: n must be > 1");
  switch (cls.type) {
    case IllPosedness::Type::mild: {
      const double xi = rate_value(rate, n);
      return static_cast<Eigen::Index>(std::max(1.0, std::ceil(n * xi * xi)));
    }
    case IllPosedness::Type::severe: {
      const double a = 0.4 / cls.c0;
      return static_cast<Eigen::Index>(
          std::max(1.0, std::ceil(std::pow(a * std::log(n), 1.0 / cls.beta))));
    }
    default:
      reject("resolution_schedule: operator has no declared decay class");
  }
}

RateTable run_experiment(const RateScenario& sc) {
  const TheoreticalRate law = theoretical_rate(sc);  // also validates
  const SpectralOperator op = make_operator(sc.op_kind, sc.op_params, sc.K_max);
  const SequenceVector f0 = sc.truth.realize(sc.K_max);

  const std::size_t reps = static_cast<std::size_t>(sc.replicates);
  const std::size_t tasks = sc.n_grid.size() * reps;
  RateTable table;
  table.law = law;
  table.rows.resize(tasks);

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks) return;
      try {
        const std::size_t ni = idx / reps, rep = idx % reps;
        const double n = sc.n_grid[ni];
        const auto t0 = std::chrono::steady_clock::now();

        const Observation obs = simulate_observation(
            f0, op, n, mix_seed(sc.seed, 0xab5ull, ni, rep));
        const double ball = sc.mass_radius_multiplier * rate_value(law, n);

        RateRow row;
        row.n = n;
        row.replicate = static_cast<Eigen::Index>(rep);
        if (std::holds_alternative<GaussianPriorSpec>(sc.prior)) {
          const ConjugatePosterior post = conjugate_posterior(
              std::get<GaussianPriorSpec>(sc.prior), obs, op);
          const std::uint64_t fseed = mix_seed(sc.seed, 0x9a2ull, ni, rep);
          row.radius = contraction_radius(post, f0, sc.credibility_tail, 4000, fseed);
          const MassEstimate m =
              posterior_mass_outside(post, f0, ball, 4000, mix_seed(fseed, 1ull));
          row.mass_outside = m.estimate;
          row.mass_se = m.std_error;
        } else {
          McmcConfig cfg = sc.mcmc;
          cfg.seed = mix_seed(sc.seed, 0x3c4aull, ni, rep);
          const PosteriorChain chain =
              std::holds_alternative<SievePriorSpec>(sc.prior)
                  ? rjmcmc_sieve_posterior(std::get<SievePriorSpec>(sc.prior), obs,
                                           op, cfg)
                  : wavelet_posterior_mcmc(std::get<WaveletPriorSpec>(sc.prior),
                                           obs, op, cfg);
          row.radius = contraction_radius(chain, f0, sc.credibility_tail);
          const MassEstimate m = posterior_mass_outside(chain, f0, ball);
          row.mass_outside = m.estimate;
          row.mass_se = m.std_error;
        }
        row.runtime_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        table.rows[idx] = row;
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  unsigned n_threads = sc.threads > 0
                           ? static_cast<unsigned>(sc.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(tasks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return table;
}

RateFit fit_rate(const RateTable& table, double tolerance) {
  if (!(tolerance > 0.0)) reject("fit_rate: tolerance must be > 0");
  // Group radii by n, preserving grid order.
  std::vector<double> ns;
  std::vector<std::vector<double>> groups;
  for (const RateRow& row : table.rows) {
    std::size_t g = ns.size();
    for (std::size_t i = 0; i < ns.size(); ++i)
      if (ns[i] == row.n) { g = i; break; }
    if (g == ns.size()) {
      ns.push_back(row.n);
      groups.emplace_back();
    }
    groups[g].push_back(row.radius);
  }
  if (ns.size() < 3) reject("fit_rate: need at least 3 distinct n values");

  const bool power = table.law.model == TheoreticalRate::Model::power;
  std::vector<double> x, y;
  x.reserve(ns.size());
  y.reserve(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double med = median(groups[i]);
    if (!(med > 0.0)) throw std::runtime_error("fit_rate: non-positive median radius");
    const double ln = std::log(ns[i]);
    if (power) {
      x.push_back(ln);
      // Divide out the known logarithmic factor so the residual slope is the
      // pure power exponent.
      y.push_back(std::log(med) - table.law.log_exponent * std::log(ln));
    } else {
      x.push_back(std::log(ln));
      y.push_back(std::log(med));
    }
  }

  const LinearFit ols = ols_fit(x, y);
  RateFit fit;
  fit.slope = ols.slope;
  fit.intercept = ols.intercept;
  fit.slope_se = ols.slope_se;
  fit.measured_exponent = -ols.slope;
  fit.theoretical_exponent = table.law.exponent;
  fit.model = table.law.model;
  fit.law = table.law.law;
  fit.tolerance = tolerance;
  fit.within_tolerance =
      std::abs(fit.measured_exponent - fit.theoretical_exponent) <= tolerance;
  return fit;
}

}  // namespace cbench
