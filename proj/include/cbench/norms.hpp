#pragma once

// Sequence-space norms.  All of them reduce to weighted l2 sums over the
// stored coordinate prefix; weights use the 1-based coordinate index k.

#include <Eigen/Core>
#include <cmath>

#include "cbench/sequence.hpp"

namespace cbench {

// (1 + k^2) for the 0-based array position i.
inline double index_weight(Eigen::Index i) {
  const double k = static_cast<double>(i) + 1.0;
  return 1.0 + k * k;
}

inline Eigen::ArrayXd index_weights(Eigen::Index n, double exponent) {
  Eigen::ArrayXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = std::pow(index_weight(i), exponent);
  return w;
}

// Sobolev norm of smoothness s: sqrt(sum f_k^2 (1+k^2)^s).
template <typename Derived>
double sobolev_norm(const Eigen::ArrayBase<Derived>& f, double s) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    acc += f[i] * f[i] * std::pow(index_weight(i), s);
  return std::sqrt(acc);
}

inline double sobolev_norm(const SequenceVector& f, double s) {
  return sobolev_norm(f.coeffs, s);
}

template <typename Derived>
double l2_norm(const Eigen::ArrayBase<Derived>& f) {
  return std::sqrt(static_cast<double>((f * f).sum()));
}

inline double l2_norm(const SequenceVector& f) { return l2_norm(f.coeffs); }

}  // namespace cbench
