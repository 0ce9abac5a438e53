#pragma once

// Band-limited (Meyer) periodized wavelets on the circle.
//
// The mother wavelet uses the degree-3 auxiliary window
//     nu(t) = t^2 (3 - 2t),  nu(t) + nu(1-t) = 1,
// which makes the family orthonormal while keeping every basis function a
// finite combination of Fourier modes.  Periodization is exact in the
// Fourier domain: the circle coefficients of psi_{l,k} are the line
// transform sampled at the integers,
//     c_m = 2^{-l/2} e^{-2 pi i m k / 2^l} Psi_hat(m / 2^l),
// supported strictly inside |m| in [2^l/3, 2^l*4/3].  The scaling function
// at level 0 reduces to the constant mode m = 0.
//
// Row order used everywhere: row 0 is the scaling function, and psi_{l,k}
// sits at row 2^l + k (0-based), i.e. levels are laid out breadth-first.

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "cbench/sequence.hpp"
#include "cbench/spectral.hpp"

namespace cbench {

// Auxiliary window, clamped to [0,1] outside the transition interval.
double meyer_window(double t);
// Scaling symbol Phi_hat(w): 1 on |w| <= 1/3, transition on [1/3, 2/3], 0 beyond.
double meyer_scaling_hat(double w);
// Wavelet symbol Psi_hat(w) = e^{i pi w} b(|w|); band |w| in [1/3, 4/3].
std::complex<double> meyer_wavelet_hat(double w);

struct WaveletCoefficients {
  double scaling = 0.0;                 // coefficient of the constant mode
  std::vector<Eigen::ArrayXd> details;  // details[l] holds 2^l entries

  Eigen::Index level_count() const { return static_cast<Eigen::Index>(details.size()); }
  Eigen::Index coefficient_count() const;
};

// Complex Fourier coefficients of the periodized psi_{l,k} on the dense
// integer band m = -m_max..m_max.
struct FourierRow {
  long m_max = 0;
  std::vector<std::complex<double>> c;  // size 2*m_max+1, index m + m_max

  std::complex<double> at(long m) const { return c[static_cast<std::size_t>(m + m_max)]; }
};

FourierRow meyer_fourier_coefficients(Eigen::Index l, Eigen::Index k);

// Smallest K_max (Fourier pair layout) that holds all levels l <= J.
Eigen::Index meyer_required_kmax(Eigen::Index J);

// Sparse real rows (cos/sin pair layout) for the scaling function and all
// wavelets with level l <= J; rows are orthonormal to machine precision.
BasisMap meyer_basis_map(Eigen::Index J);

// Wavelet coefficients of a Fourier-pair coordinate vector; f must cover the
// band of every level l <= J.
WaveletCoefficients wavelet_analysis(const SequenceVector& f, Eigen::Index J);

// Fourier-pair coordinates of a wavelet expansion.
SequenceVector wavelet_synthesis(const WaveletCoefficients& wc, Eigen::Index K_max);

// Besov sequence norm; supported index pairs are (p,q) = (2,2) and
// (inf,inf) (pass std::numeric_limits<double>::infinity()).
//   (2,2):    |u| + ( sum_l (2^{l s} ||beta_l||_2)^2 )^{1/2}
//   (inf,inf): max(|u|, sup_l 2^{l(s+1/2)} max_k |beta_{l,k}|)
double besov_norm(const WaveletCoefficients& wc, double s, double p, double q);

}  // namespace cbench
