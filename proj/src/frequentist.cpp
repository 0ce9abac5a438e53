#include "cbench/frequentist.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cbench/rng.hpp"

namespace cbench {

namespace {

void check_rows(const BasisMap& bm, const SpectralOperator& op, Eigen::Index k_n,
                const char* who) {
  if (k_n < 1 || k_n > bm.row_count()) {
    std::ostringstream os;
    os << who << ": k_n=" << k_n << " outside populated rows 1.." << bm.row_count();
    throw std::invalid_argument(os.str());
  }
  if (bm.required_kmax() > op.K_max()) {
    std::ostringstream os;
    os << who << ": analysis rows reach position " << bm.required_kmax()
       << " beyond operator K_max=" << op.K_max();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double DualFunctional::apply(const Eigen::ArrayXd& y) const {
  double acc = 0.0;
  for (const auto& [i, v] : coeffs) acc += v * y[i];
  return acc;
}

DualFunctional dual_functional(const BasisMap& bm, const SpectralOperator& op,
                               Eigen::Index k) {
  check_rows(bm, op, k, "dual_functional");
  DualFunctional d;
  d.k = k;
  const auto& row = bm.rows[static_cast<std::size_t>(k - 1)];
  if (row.empty())
    throw std::invalid_argument("dual_functional: analysis row has empty support");
  d.coeffs.reserve(row.size());
  for (const auto& [i, v] : row) {
    const double c = v / op.rho()[i];
    d.coeffs.push_back({i, c});
    d.norm_sq += c * c;
  }
  return d;
}

SequenceVector plugin_estimator(const Observation& obs, const BasisMap& bm,
                                const SpectralOperator& op, Eigen::Index k_n) {
  check_rows(bm, op, k_n, "plugin_estimator");
  if (obs.y.size() != op.K_max())
    throw std::invalid_argument("plugin_estimator: observation size mismatch");
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(op.K_max());
  for (Eigen::Index k = 1; k <= k_n; ++k) {
    const DualFunctional d = dual_functional(bm, op, k);
    const double ytilde = d.apply(obs.y);
    for (const auto& [i, v] : bm.rows[static_cast<std::size_t>(k - 1)])
      out[i] += ytilde * v;
  }
  return SequenceVector(std::move(out), BasisTag::svd);
}

BorellBound borell_tail_bound(const BasisMap& bm, const SpectralOperator& op,
                              Eigen::Index k_n, double n, double x) {
  if (!(n > 0.0)) throw std::invalid_argument("borell_tail_bound: n must be > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("borell_tail_bound: x must be >= 0");
  const double delta = ill_posedness_delta(bm, op, k_n);
  BorellBound b;
  b.mean_bound = std::sqrt(static_cast<double>(k_n)) / (delta * std::sqrt(n));
  b.tail_bound = std::exp(-0.5 * n * delta * delta * x * x);
  return b;
}

bool plugin_test(const Observation& obs, const SequenceVector& f0,
                 const BasisMap& bm, const SpectralOperator& op,
                 Eigen::Index k_n, double M0, double xi_n) {
  if (!(M0 > 0.0) || !(xi_n > 0.0))
    throw std::invalid_argument("plugin_test: M0 and xi_n must be > 0");
  if (f0.size() != op.K_max())
    throw std::invalid_argument("plugin_test: f0 size mismatch");
  const SequenceVector fn = plugin_estimator(obs, bm, op, k_n);
  const double dist = std::sqrt((fn.coeffs - f0.coeffs).square().sum());
  return dist >= M0 * xi_n;
}

double calibrate_plugin_threshold(const SpectralOperator& op, const BasisMap& bm,
                                  const SequenceVector& f0, Eigen::Index k_n,
                                  double xi_n, double n, Eigen::Index replicates,
                                  double quantile, std::uint64_t seed) {
  if (replicates < 1)
    throw std::invalid_argument("calibrate_plugin_threshold: replicates must be >= 1");
  if (!(quantile > 0.0 && quantile < 1.0))
    throw std::invalid_argument("calibrate_plugin_threshold: quantile in (0,1)");
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(replicates));
  for (Eigen::Index r = 0; r < replicates; ++r) {
    const Observation obs =
        simulate_observation(f0, op, n, mix_seed(seed, 0xca11ull, static_cast<std::uint64_t>(r)));
    const SequenceVector fn = plugin_estimator(obs, bm, op, k_n);
    ratios.push_back(std::sqrt((fn.coeffs - f0.coeffs).square().sum()) / xi_n);
  }
  std::sort(ratios.begin(), ratios.end());
  const auto rank = static_cast<std::size_t>(
      std::max(1.0, std::ceil(quantile * static_cast<double>(replicates))));
  return ratios[rank - 1];
}

PowerEstimate estimate_test_errors(const SpectralOperator& op, const BasisMap& bm,
                                   const SequenceVector& f0,
                                   const std::vector<SequenceVector>& alternatives,
                                   Eigen::Index k_n, double M0, double xi_n,
                                   double n, Eigen::Index replicates,
                                   std::uint64_t seed) {
  if (replicates < 1)
    throw std::invalid_argument("estimate_test_errors: replicates must be >= 1");
  PowerEstimate out;
  const double N = static_cast<double>(replicates);
  double rejections = 0.0;
  for (Eigen::Index r = 0; r < replicates; ++r) {
    const Observation obs =
        simulate_observation(f0, op, n, mix_seed(seed, 0u, static_cast<std::uint64_t>(r)));
    if (plugin_test(obs, f0, bm, op, k_n, M0, xi_n)) rejections += 1.0;
  }
  out.type1 = rejections / N;
  out.type1_se = std::sqrt(std::max(out.type1 * (1.0 - out.type1), 0.0) / N);
  for (std::size_t a = 0; a < alternatives.size(); ++a) {
    double accepts = 0.0;
    for (Eigen::Index r = 0; r < replicates; ++r) {
      const Observation obs = simulate_observation(
          alternatives[a], op, n,
          mix_seed(seed, static_cast<std::uint64_t>(a + 1), static_cast<std::uint64_t>(r)));
      if (!plugin_test(obs, f0, bm, op, k_n, M0, xi_n)) accepts += 1.0;
    }
    const double t2 = accepts / N;
    out.type2.push_back(t2);
    out.type2_se.push_back(std::sqrt(std::max(t2 * (1.0 - t2), 0.0) / N));
  }
  return out;
}

}  // namespace cbench
