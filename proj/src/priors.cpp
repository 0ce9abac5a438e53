#include "cbench/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cbench {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

// --- truncation law ---------------------------------------------------------

Eigen::Index RealizedPmf::sample(Engine& eng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(eng);
  double acc = 0.0;
  for (Eigen::Index m = 0; m < p.size(); ++m) {
    acc += p[m];
    if (u <= acc) return m + 1;
  }
  return p.size();  // guard against accumulated rounding
}

RealizedPmf TruncationPmf::realize(Eigen::Index K_max) const {
  if (K_max < 1) throw std::invalid_argument("TruncationPmf: K_max must be >= 1");
  Eigen::ArrayXd w(K_max);
  double beyond = 0.0;
  switch (kind) {
    case Kind::exponential:
    case Kind::stretched: {
      if (b <= 0.0 || power <= 0.0)
        throw std::invalid_argument("TruncationPmf: b and power must be > 0");
      for (Eigen::Index m = 1; m <= K_max; ++m)
        w[m - 1] = std::exp(-b * std::pow(static_cast<double>(m), power));
      // Untruncated mass beyond K_max, summed until terms stop mattering.
      for (Eigen::Index m = K_max + 1; m <= K_max + (1 << 20); ++m) {
        const double t = std::exp(-b * std::pow(static_cast<double>(m), power));
        beyond += t;
        if (t < 1e-18 * (w.sum() + beyond)) break;
      }
      break;
    }
    case Kind::table: {
      if (table.empty()) throw std::invalid_argument("TruncationPmf: empty table");
      for (Eigen::Index m = 0; m < K_max; ++m)
        w[m] = (m < static_cast<Eigen::Index>(table.size()))
                   ? table[static_cast<std::size_t>(m)]
                   : 0.0;
      for (std::size_t m = static_cast<std::size_t>(K_max); m < table.size(); ++m)
        beyond += table[m];
      break;
    }
  }
  if ((w < 0.0).any()) throw std::invalid_argument("TruncationPmf: negative weight");
  const double Z = w.sum();
  if (Z <= 0.0) throw std::invalid_argument("TruncationPmf: zero mass on 1..K_max");
  RealizedPmf out;
  out.p = w / Z;
  out.log_p = out.p.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kNegInf; });
  out.clipped_tail = beyond / (Z + beyond);
  return out;
}

TruncationPmf TruncationPmf::exponential(double b) {
  TruncationPmf h;
  h.kind = Kind::exponential;
  h.b = b;
  h.power = 1.0;
  return h;
}

TruncationPmf TruncationPmf::stretched(double b, double power) {
  TruncationPmf h;
  h.kind = Kind::stretched;
  h.b = b;
  h.power = power;
  return h;
}

TruncationPmf TruncationPmf::from_table(std::vector<double> weights) {
  TruncationPmf h;
  h.kind = Kind::table;
  h.table = std::move(weights);
  return h;
}

// --- coefficient density ----------------------------------------------------

double CoefficientDensity::log_density(double x) const {
  switch (family) {
    case Family::gaussian:
      return -0.5 * x * x - 0.5 * std::log(2.0 * kPi);
    case Family::laplace:
      return -std::abs(x) - std::log(2.0);
    case Family::cauchy:
      return -std::log(kPi * (1.0 + x * x));
    case Family::custom: {
      if (std::abs(x) > x_max) return kNegInf;
      const std::size_t N = table.size();
      const double step = 2.0 * x_max / static_cast<double>(N - 1);
      const double pos = (x + x_max) / step;
      const std::size_t lo = std::min(static_cast<std::size_t>(pos), N - 2);
      const double frac = pos - static_cast<double>(lo);
      const double v = table[lo] * (1.0 - frac) + table[lo + 1] * frac;
      return v > 0.0 ? std::log(v) : kNegInf;
    }
  }
  return kNegInf;
}

double CoefficientDensity::sample(Engine& eng) const {
  switch (family) {
    case Family::gaussian: return draw_normal(eng);
    case Family::laplace: return draw_laplace(eng);
    case Family::cauchy: return draw_cauchy(eng);
    case Family::custom: {
      // Inverse CDF over the trapezoid cumulative of the table.
      const std::size_t N = table.size();
      const double step = 2.0 * x_max / static_cast<double>(N - 1);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double target = unif(eng);
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < N; ++i) {
        const double cell = 0.5 * (table[i] + table[i + 1]) * step;
        if (acc + cell >= target || i + 2 == N) {
          const double frac = cell > 0.0 ? (target - acc) / cell : 0.5;
          return -x_max + step * (static_cast<double>(i) + std::clamp(frac, 0.0, 1.0));
        }
        acc += cell;
      }
      return 0.0;
    }
  }
  return 0.0;
}

CoefficientDensity CoefficientDensity::gaussian() {
  CoefficientDensity q;
  q.family = Family::gaussian;
  q.D = 1.0 / std::sqrt(2.0 * kPi);
  q.d = 0.5;
  q.w = 2.0;
  return q;
}

CoefficientDensity CoefficientDensity::laplace() {
  CoefficientDensity q;
  q.family = Family::laplace;
  q.D = 0.5;
  q.d = 1.0;
  q.w = 1.0;
  return q;
}

CoefficientDensity CoefficientDensity::cauchy() {
  // 1/(pi(1+x^2)) >= (1/pi) e^{-|x|} since 1 + x^2 <= e^{|x|}.
  CoefficientDensity q;
  q.family = Family::cauchy;
  q.D = 1.0 / kPi;
  q.d = 1.0;
  q.w = 1.0;
  return q;
}

CoefficientDensity CoefficientDensity::custom(std::vector<double> table,
                                              double x_max, double D, double d,
                                              double w) {
  if (table.size() < 2 || x_max <= 0.0)
    throw std::invalid_argument("CoefficientDensity::custom: need a grid on [-x_max, x_max]");
  if (D <= 0.0 || d <= 0.0 || w < 1.0)
    throw std::invalid_argument("CoefficientDensity::custom: certificate needs D,d > 0 and w >= 1");
  const std::size_t N = table.size();
  const double step = 2.0 * x_max / static_cast<double>(N - 1);
  double Z = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (table[i] < 0.0) throw std::invalid_argument("CoefficientDensity::custom: negative density");
    Z += 0.5 * (table[i] + table[i + 1]) * step;
  }
  if (Z <= 0.0) throw std::invalid_argument("CoefficientDensity::custom: zero mass");
  for (auto& v : table) v /= Z;
  CoefficientDensity q;
  q.family = Family::custom;
  q.table = std::move(table);
  q.x_max = x_max;
  q.D = D;
  q.d = d;
  q.w = w;
  // Certificate check on the represented grid.
  for (std::size_t i = 0; i < N; ++i) {
    const double x = -x_max + step * static_cast<double>(i);
    const double floor = D * std::exp(-d * std::pow(std::abs(x), w));
    if (q.table[i] + 1e-12 < floor) {
      std::ostringstream os;
      os << "CoefficientDensity::custom: floor certificate fails at x=" << x
         << " (density " << q.table[i] << " < " << floor << ")";
      throw std::invalid_argument(os.str());
    }
  }
  return q;
}

// --- scale schedules --------------------------------------------------------

double TauSchedule::at(Eigen::Index k) const {
  if (k < 1) throw std::invalid_argument("TauSchedule: k must be >= 1");
  const double kk = static_cast<double>(k);
  double v = scale * std::pow(1.0 + kk * kk, exponent);
  if (log_exponent != 0.0)
    v *= std::pow(std::log(std::max(kk, 2.0)), -log_exponent);
  return v;
}

Eigen::ArrayXd TauSchedule::values(Eigen::Index K) const {
  Eigen::ArrayXd out(K);
  for (Eigen::Index k = 1; k <= K; ++k) out[k - 1] = at(k);
  return out;
}

TauSchedule TauSchedule::constant(double tau) {
  if (tau <= 0.0) throw std::invalid_argument("TauSchedule: tau must be > 0");
  TauSchedule t;
  t.scale = tau;
  return t;
}

TauSchedule TauSchedule::power(double exponent, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("TauSchedule: scale must be > 0");
  TauSchedule t;
  t.scale = scale;
  t.exponent = exponent;
  return t;
}

// --- prior specs ------------------------------------------------------------

void SievePriorSpec::validate() const {
  if (K_max < 1) throw std::invalid_argument("SievePriorSpec: K_max must be >= 1");
  if (q.D <= 0.0 || q.d <= 0.0 || q.w < 1.0)
    throw std::invalid_argument("SievePriorSpec: q lacks a valid floor certificate");
  if (tau.scale <= 0.0) throw std::invalid_argument("SievePriorSpec: tau must be positive");
  (void)h.realize(K_max);
}

double GaussianPriorSpec::tau_at(Eigen::Index k) const {
  const double kk = static_cast<double>(k);
  return std::pow(1.0 + kk * kk, -(delta + 0.5) / 2.0);
}

Eigen::ArrayXd GaussianPriorSpec::taus() const {
  Eigen::ArrayXd out(K_max);
  for (Eigen::Index k = 1; k <= K_max; ++k) out[k - 1] = tau_at(k);
  return out;
}

void GaussianPriorSpec::validate() const {
  if (delta <= 0.0) throw std::invalid_argument("GaussianPriorSpec: delta must be > 0");
  if (K_max < 1) throw std::invalid_argument("GaussianPriorSpec: K_max must be >= 1");
}

RealizedPmf RadiusDistribution::realize() const {
  if (kind == Kind::point_mass)
    throw std::invalid_argument("RadiusDistribution: point mass has no pmf table");
  if (D <= 0.0 || nu <= 0.0 || r_max < 1)
    throw std::invalid_argument("RadiusDistribution: need D, nu > 0 and r_max >= 1");
  Eigen::ArrayXd w(r_max);
  for (Eigen::Index r = 1; r <= r_max; ++r) {
    const double e = D * std::pow(static_cast<double>(r), nu);
    w[r - 1] = (kind == Kind::stretched) ? std::exp(-e)
                                         : std::exp(-std::exp(std::min(e, 700.0)));
  }
  const double Z = w.sum();
  if (Z <= 0.0) throw std::invalid_argument("RadiusDistribution: all weights underflow");
  RealizedPmf out;
  out.p = w / Z;
  out.log_p = out.p.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kNegInf; });
  out.clipped_tail = 0.0;
  return out;
}

double RadiusDistribution::sample(Engine& eng) const {
  if (kind == Kind::point_mass) return B0;
  return static_cast<double>(realize().sample(eng));
}

RadiusDistribution RadiusDistribution::point_mass(double B0) {
  if (B0 <= 0.0) throw std::invalid_argument("RadiusDistribution: B0 must be > 0");
  RadiusDistribution h;
  h.kind = Kind::point_mass;
  h.B0 = B0;
  return h;
}

RadiusDistribution RadiusDistribution::stretched(double D, double nu, Eigen::Index r_max) {
  RadiusDistribution h;
  h.kind = Kind::stretched;
  h.D = D;
  h.nu = nu;
  h.r_max = r_max;
  (void)h.realize();
  return h;
}

RadiusDistribution RadiusDistribution::double_exponential(double D, double nu,
                                                          Eigen::Index r_max) {
  RadiusDistribution h;
  h.kind = Kind::double_exponential;
  h.D = D;
  h.nu = nu;
  h.r_max = r_max;
  (void)h.realize();
  return h;
}

void WaveletPriorSpec::validate() const {
  if (delta <= 0.0) throw std::invalid_argument("WaveletPriorSpec: delta must be > 0");
  if (J_max < 0) throw std::invalid_argument("WaveletPriorSpec: J_max must be >= 0");
  if (H.kind == RadiusDistribution::Kind::point_mass) {
    if (H.B0 <= 0.0) throw std::invalid_argument("WaveletPriorSpec: radius must be > 0");
  } else {
    (void)H.realize();
  }
}

// --- samplers ---------------------------------------------------------------

SieveDraw sample_sieve_prior(const SievePriorSpec& spec, Engine& eng) {
  spec.validate();
  const RealizedPmf pmf = spec.h.realize(spec.K_max);
  const Eigen::Index M = pmf.sample(eng);
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(spec.K_max);
  for (Eigen::Index k = 1; k <= M; ++k) f[k - 1] = spec.tau.at(k) * spec.q.sample(eng);
  return SieveDraw{SequenceVector(std::move(f), BasisTag::svd), M};
}

SequenceVector sample_gaussian_prior(const GaussianPriorSpec& spec, Engine& eng) {
  spec.validate();
  Eigen::ArrayXd f(spec.K_max);
  for (Eigen::Index k = 1; k <= spec.K_max; ++k)
    f[k - 1] = spec.tau_at(k) * draw_normal(eng);
  return SequenceVector(std::move(f), BasisTag::svd);
}

WaveletDraw sample_wavelet_prior(const WaveletPriorSpec& spec, Engine& eng) {
  spec.validate();
  const double R = spec.H.sample(eng);
  WaveletDraw out;
  out.radius = R;
  const Eigen::Index total =
      1 + ((Eigen::Index{1} << (spec.J_max + 1)) - 1);  // u plus all levels
  out.latent.resize(total);
  Eigen::Index pos = 0;
  out.latent[pos++] = draw_uniform(eng, -R, R);
  out.coeffs.scaling = out.latent[0];
  out.coeffs.details.resize(static_cast<std::size_t>(spec.J_max + 1));
  for (Eigen::Index l = 0; l <= spec.J_max; ++l) {
    const Eigen::Index width = Eigen::Index{1} << l;
    const double weight = std::exp2(-static_cast<double>(l) * (spec.delta + 0.5));
    Eigen::ArrayXd beta(width);
    for (Eigen::Index k = 0; k < width; ++k) {
      out.latent[pos] = draw_uniform(eng, -R, R);
      beta[k] = weight * out.latent[pos];
      ++pos;
    }
    out.coeffs.details[static_cast<std::size_t>(l)] = std::move(beta);
  }
  return out;
}

SieveDraw sample_sieve_prior(const SievePriorSpec& spec, std::uint64_t seed) {
  Engine eng = substream(seed, 0x51e7ull);
  return sample_sieve_prior(spec, eng);
}

SequenceVector sample_gaussian_prior(const GaussianPriorSpec& spec, std::uint64_t seed) {
  Engine eng = substream(seed, 0x6a05ull);
  return sample_gaussian_prior(spec, eng);
}

WaveletDraw sample_wavelet_prior(const WaveletPriorSpec& spec, std::uint64_t seed) {
  Engine eng = substream(seed, 0x3a7eull);
  return sample_wavelet_prior(spec, eng);
}

double density_ball_lower_bound(const CoefficientDensity& q, double z, double t,
                                bool paired_coordinate) {
  if (!(t > 0.0)) throw std::invalid_argument("density_ball_lower_bound: t must be > 0");
  if (q.D <= 0.0 || q.d <= 0.0 || q.w < 1.0)
    throw std::invalid_argument("density_ball_lower_bound: invalid certificate");
  const double base =
      2.0 * q.D * t * std::exp(-q.d * std::pow(std::abs(z) + t, q.w));
  return paired_coordinate ? kPi * base : base;
}

SequenceVector sample_prior_coords(const AnyPrior& prior, Eigen::Index K_max,
                                   Engine& eng) {
  if (std::holds_alternative<SievePriorSpec>(prior)) {
    const auto& spec = std::get<SievePriorSpec>(prior);
    if (spec.K_max != K_max)
      throw std::invalid_argument("sample_prior_coords: sieve K_max mismatch");
    return sample_sieve_prior(spec, eng).f;
  }
  if (std::holds_alternative<GaussianPriorSpec>(prior)) {
    const auto& spec = std::get<GaussianPriorSpec>(prior);
    if (spec.K_max != K_max)
      throw std::invalid_argument("sample_prior_coords: gaussian K_max mismatch");
    return sample_gaussian_prior(spec, eng);
  }
  const auto& spec = std::get<WaveletPriorSpec>(prior);
  const WaveletDraw draw = sample_wavelet_prior(spec, eng);
  return wavelet_synthesis(draw.coeffs, K_max);
}

}  // namespace cbench
