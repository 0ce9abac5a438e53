#include "cbench/wavelets.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cbench {

namespace {
constexpr double kPi = std::numbers::pi;

// Entries this small relative to the row norm are band-edge zeros.
constexpr double kRowDrop = 1e-300;
}  // namespace

double meyer_window(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

double meyer_scaling_hat(double w) {
  const double t = std::abs(w);
  if (t <= 1.0 / 3.0) return 1.0;
  if (t >= 2.0 / 3.0) return 0.0;
  return std::cos(kPi / 2.0 * meyer_window(3.0 * t - 1.0));
}

std::complex<double> meyer_wavelet_hat(double w) {
  const double t = std::abs(w);
  double b = 0.0;
  if (t > 1.0 / 3.0 && t < 2.0 / 3.0)
    b = std::sin(kPi / 2.0 * meyer_window(3.0 * t - 1.0));
  else if (t >= 2.0 / 3.0 && t < 4.0 / 3.0)
    b = std::cos(kPi / 2.0 * meyer_window(1.5 * t - 1.0));
  if (b == 0.0) return {0.0, 0.0};
  // Half-shift phase; required for orthogonality across levels.
  return std::polar(b, kPi * w);
}

Eigen::Index WaveletCoefficients::coefficient_count() const {
  Eigen::Index n = 1;
  for (const auto& d : details) n += d.size();
  return n;
}

FourierRow meyer_fourier_coefficients(Eigen::Index l, Eigen::Index k) {
  if (l < 0) throw std::invalid_argument("meyer_fourier_coefficients: l must be >= 0");
  const Eigen::Index width = Eigen::Index{1} << l;
  if (k < 0 || k >= width)
    throw std::invalid_argument("meyer_fourier_coefficients: k out of range");
  const double scale = static_cast<double>(width);
  FourierRow row;
  row.m_max = static_cast<long>(std::floor(scale * 4.0 / 3.0));
  row.c.assign(static_cast<std::size_t>(2 * row.m_max + 1), {0.0, 0.0});
  for (long m = -row.m_max; m <= row.m_max; ++m) {
    const std::complex<double> psi = meyer_wavelet_hat(static_cast<double>(m) / scale);
    if (psi == std::complex<double>(0.0, 0.0)) continue;
    const double shift = -2.0 * kPi * static_cast<double>(m) *
                         static_cast<double>(k) / scale;
    row.c[static_cast<std::size_t>(m + row.m_max)] =
        psi * std::polar(1.0 / std::sqrt(scale), shift);
  }
  return row;
}

Eigen::Index meyer_required_kmax(Eigen::Index J) {
  if (J < 0) throw std::invalid_argument("meyer_required_kmax: J must be >= 0");
  const double scale = static_cast<double>(Eigen::Index{1} << J);
  const long m_max = static_cast<long>(std::floor(scale * 4.0 / 3.0));
  return static_cast<Eigen::Index>(2 * m_max + 1);
}

namespace {

// Real cos/sin pair entries of a complex-coefficient row (conjugate-symmetric
// by construction since the time-domain function is real).
BasisMap::Row to_pair_row(const FourierRow& fr) {
  BasisMap::Row out;
  const std::complex<double> c0 = fr.at(0);
  if (std::abs(c0) > kRowDrop) out.push_back({0, c0.real()});
  for (long m = 1; m <= fr.m_max; ++m) {
    const std::complex<double> cm = fr.at(m);
    if (std::abs(cm) <= kRowDrop) continue;
    const double u = cm.real();
    const double v = cm.imag();
    // f = sum c_m e^{2 pi i m x}: the pair (c_m, conj(c_m)) contributes
    // sqrt(2) u on the cos coordinate and -sqrt(2) v on the sin coordinate.
    const double root2 = std::sqrt(2.0);
    if (std::abs(u) > kRowDrop) out.push_back({2 * m - 1, root2 * u});
    if (std::abs(v) > kRowDrop) out.push_back({2 * m, -root2 * v});
  }
  return out;
}

}  // namespace

BasisMap meyer_basis_map(Eigen::Index J) {
  if (J < 0) throw std::invalid_argument("meyer_basis_map: J must be >= 0");
  BasisMap bm;
  bm.rows.reserve(static_cast<std::size_t>(Eigen::Index{1} << (J + 1)));
  bm.rows.push_back({{0, 1.0}});  // periodized scaling function = constant mode
  for (Eigen::Index l = 0; l <= J; ++l) {
    const Eigen::Index width = Eigen::Index{1} << l;
    for (Eigen::Index k = 0; k < width; ++k)
      bm.rows.push_back(to_pair_row(meyer_fourier_coefficients(l, k)));
  }
  return bm;
}

WaveletCoefficients wavelet_analysis(const SequenceVector& f, Eigen::Index J) {
  if (J < 0) throw std::invalid_argument("wavelet_analysis: J must be >= 0");
  const Eigen::Index need = meyer_required_kmax(J);
  if (f.size() < need) {
    std::ostringstream os;
    os << "wavelet_analysis: level " << J << " needs K_max >= " << need
       << ", vector has " << f.size();
    throw std::invalid_argument(os.str());
  }
  WaveletCoefficients wc;
  wc.scaling = f.coeffs[0];
  wc.details.resize(static_cast<std::size_t>(J + 1));
  const BasisMap bm = meyer_basis_map(J);
  std::size_t r = 1;
  for (Eigen::Index l = 0; l <= J; ++l) {
    const Eigen::Index width = Eigen::Index{1} << l;
    Eigen::ArrayXd beta(width);
    for (Eigen::Index k = 0; k < width; ++k, ++r) {
      double acc = 0.0;
      for (const auto& [i, v] : bm.rows[r]) acc += v * f.coeffs[i];
      beta[k] = acc;
    }
    wc.details[static_cast<std::size_t>(l)] = std::move(beta);
  }
  return wc;
}

SequenceVector wavelet_synthesis(const WaveletCoefficients& wc, Eigen::Index K_max) {
  const Eigen::Index J = wc.level_count() - 1;
  const Eigen::Index need = J >= 0 ? meyer_required_kmax(J) : 1;
  if (K_max < need) {
    std::ostringstream os;
    os << "wavelet_synthesis: levels up to " << J << " need K_max >= " << need
       << ", got " << K_max;
    throw std::invalid_argument(os.str());
  }
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(K_max);
  out[0] = wc.scaling;
  for (Eigen::Index l = 0; l <= J; ++l) {
    const Eigen::Index width = Eigen::Index{1} << l;
    const auto& beta = wc.details[static_cast<std::size_t>(l)];
    if (beta.size() != width)
      throw std::invalid_argument("wavelet_synthesis: level width mismatch");
    for (Eigen::Index k = 0; k < width; ++k) {
      if (beta[k] == 0.0) continue;
      for (const auto& [i, v] : to_pair_row(meyer_fourier_coefficients(l, k)))
        out[i] += beta[k] * v;
    }
  }
  return SequenceVector(std::move(out), BasisTag::svd);
}

double besov_norm(const WaveletCoefficients& wc, double s, double p, double q) {
  const double inf = std::numeric_limits<double>::infinity();
  if (p == 2.0 && q == 2.0) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < wc.level_count(); ++l) {
      const auto& beta = wc.details[static_cast<std::size_t>(l)];
      const double lvl = std::exp2(static_cast<double>(l) * s) *
                         std::sqrt(static_cast<double>(beta.square().sum()));
      acc += lvl * lvl;
    }
    return std::abs(wc.scaling) + std::sqrt(acc);
  }
  if (p == inf && q == inf) {
    double best = std::abs(wc.scaling);
    for (Eigen::Index l = 0; l < wc.level_count(); ++l) {
      const auto& beta = wc.details[static_cast<std::size_t>(l)];
      if (beta.size() == 0) continue;
      const double lvl = std::exp2(static_cast<double>(l) * (s + 0.5)) *
                         beta.abs().maxCoeff();
      best = std::max(best, lvl);
    }
    return best;
  }
  throw std::invalid_argument("besov_norm: only (p,q) = (2,2) or (inf,inf) supported");
}

}  // namespace cbench
