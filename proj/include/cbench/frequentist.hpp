#pragma once

// Plug-in estimation and testing.
//
// Given an orthonormal analysis family {phi_k} expressed over the SVD basis
// (a BasisMap), the dual functionals
//     phitilde_k = sum_i rho_i^{-1} phi_{k,i} g_i
// turn observations into unbiased coordinate estimates
//     ytilde_k = sum_i rho_i^{-1} phi_{k,i} y_i,   E ytilde_k = <f, phi_k>,
// and the truncated reconstruction f_n = sum_{k <= k_n} ytilde_k phi_k has
// E f_n = P_{k_n} f.  Gaussian concentration of ||f_n - E f_n||_2 is
// quantified by Borell's inequality through delta_{k_n}.

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "cbench/sequence.hpp"
#include "cbench/spectral.hpp"

namespace cbench {

struct DualFunctional {
  Eigen::Index k = 1;  // 1-based analysis row
  // (svd position, rho_i^{-1} phi_{k,i}); finite support inherited from the row.
  std::vector<std::pair<Eigen::Index, double>> coeffs;
  double norm_sq = 0.0;  // ||phitilde_k||_2^2 <= delta_k^{-2}

  double apply(const Eigen::ArrayXd& y) const;
};

DualFunctional dual_functional(const BasisMap& bm, const SpectralOperator& op,
                               Eigen::Index k);

// f_n in SVD coordinates.
SequenceVector plugin_estimator(const Observation& obs, const BasisMap& bm,
                                const SpectralOperator& op, Eigen::Index k_n);

struct BorellBound {
  double mean_bound = 0.0;  // E ||f_n - E f_n||_2 <= sqrt(k_n) / (delta_{k_n} sqrt(n))
  double tail_bound = 0.0;  // P(||f_n - E f_n||_2 >= x + mean) <= exp(-n delta^2 x^2 / 2)
};

BorellBound borell_tail_bound(const BasisMap& bm, const SpectralOperator& op,
                              Eigen::Index k_n, double n, double x);

// 1{ ||f_n - f0||_2 >= M0 xi_n }
bool plugin_test(const Observation& obs, const SequenceVector& f0,
                 const BasisMap& bm, const SpectralOperator& op,
                 Eigen::Index k_n, double M0, double xi_n);

// Pilot calibration: the `quantile` empirical quantile of ||f_n - f0|| / xi_n
// under f = f0, so that the test at the returned M0 has approximately
// (1 - quantile) type-I error.
double calibrate_plugin_threshold(const SpectralOperator& op, const BasisMap& bm,
                                  const SequenceVector& f0, Eigen::Index k_n,
                                  double xi_n, double n, Eigen::Index replicates,
                                  double quantile, std::uint64_t seed);

struct PowerEstimate {
  double type1 = 0.0, type1_se = 0.0;
  std::vector<double> type2, type2_se;  // one entry per alternative
};

// Monte Carlo error rates of the plug-in test: type-I under f0 and type-II
// under each alternative.
PowerEstimate estimate_test_errors(const SpectralOperator& op, const BasisMap& bm,
                                   const SequenceVector& f0,
                                   const std::vector<SequenceVector>& alternatives,
                                   Eigen::Index k_n, double M0, double xi_n,
                                   double n, Eigen::Index replicates,
                                   std::uint64_t seed);

}  // namespace cbench
