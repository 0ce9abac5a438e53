#pragma once

// Diagonal spectral models for linear inverse problems on the circle.
//
// An operator is represented by its singular values rho_k, k = 1..K_max, in
// an orthonormal SVD basis.  Observations follow the sequence-space white
// noise model
//
//     y_k = rho_k f_k + z_k / sqrt(n),   z_k iid N(0,1),
//
// so every downstream quantity (likelihoods, posteriors, tests) reduces to
// weighted l2 computations on coordinate arrays.
//
// Decay regimes:
//   mild:    C1 (1+k^2)^{-alpha/2} <= |rho_k| <= C2 (1+k^2)^{-alpha/2}
//   severe:  C1 (1+k^2)^{-alpha0/2} e^{-c0 k^beta} <= |rho_k|
//                                   <= C2 (1+k^2)^{-alpha1/2} e^{-c0 k^beta}
//
// Fourier-type operators ("paired" layout) act by convolution; complex
// frequency coefficients are stored as real cos/sin pairs so all norms stay
// real l2.  Position 0 carries frequency 0, positions 2m-1 and 2m (0-based)
// carry the cos/sin pair of frequency m.  Conjugate symmetry of the symbol is
// automatic for real measures; an asymmetric phase is absorbed into the
// choice of basis inside each frequency pair, which leaves the singular
// values |mu_hat(m)| unchanged.

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cbench/sequence.hpp"

namespace cbench {

enum class OperatorKind {
  identity,
  mild_power,
  severe_exp,
  deconvolution,
  heat,
  radon_surrogate,
};

const char* to_string(OperatorKind k);
OperatorKind operator_kind_from_string(const std::string& s);

// Decay classification; envelope constants are fitted per operator instance.
struct IllPosedness {
  enum class Type { mild, severe, custom };
  Type type = Type::custom;
  double alpha = 0.0;               // mild exponent
  double beta = 0.0, c0 = 0.0;      // severe exponential law
  double alpha0 = 0.0, alpha1 = 0.0;  // severe polynomial corrections

  static IllPosedness mild_of(double alpha);
  static IllPosedness severe_of(double beta, double c0, double alpha0 = 0.0,
                                double alpha1 = 0.0);
  static IllPosedness custom();
};

struct PointAtom {
  double x = 0.0;    // location in [0,1)
  double mass = 0.0;
};

// Finite signed measure on the circle: point atoms plus an optional density
// sampled on the uniform grid x_g = g/G.  Fourier coefficients of the density
// part are the discrete transform of the samples (exact for the grid measure,
// O(1/G) from the continuum for piecewise-smooth densities).
struct SignedMeasure {
  std::vector<PointAtom> atoms;
  std::vector<double> density;

  // mu_hat(m) = integral of e^{2 pi i m x} d mu(x)
  std::complex<double> fourier(long m) const;
  double total_mass() const;
  double total_variation() const;  // crude upper proxy used for zero tests
  bool empty() const { return atoms.empty() && density.empty(); }
};

struct OperatorParams {
  double alpha = 1.0;            // mild_power
  double beta = 1.0;             // severe_exp
  double c0 = 1.0;               // severe_exp
  double poly = 0.0;             // severe_exp polynomial correction exponent
  double T = 0.1;                // heat diffusion time
  SignedMeasure measure;         // deconvolution symbol source
  bool paired = false;           // Fourier pair layout (forced for deconvolution)
  IllPosedness declared;         // optional classification override
};

class SpectralOperator {
 public:
  SpectralOperator(OperatorKind kind, OperatorParams params, Eigen::ArrayXd rho,
                   bool paired, IllPosedness cls);

  OperatorKind kind() const { return kind_; }
  const OperatorParams& params() const { return params_; }
  const Eigen::ArrayXd& rho() const { return rho_; }
  Eigen::Index K_max() const { return rho_.size(); }
  bool paired() const { return paired_; }
  const IllPosedness& classification() const { return cls_; }

  // 1-based coordinate accessor.
  double rho_at(Eigen::Index k) const;
  // Frequency carried by the 0-based position i (paired layout; i itself + 1
  // for plain layouts, where "frequency" is just the coordinate index).
  long frequency_of(Eigen::Index i) const;

 private:
  OperatorKind kind_;
  OperatorParams params_;
  Eigen::ArrayXd rho_;
  bool paired_;
  IllPosedness cls_;
};

// Builds the singular value sequence for k = 1..K_max and validates
// injectivity: any vanishing (or underflowing) singular value is rejected
// with a domain_error naming the failing coordinate and, for the severe
// kinds, the largest representable K_max.
SpectralOperator make_operator(OperatorKind kind, const OperatorParams& params,
                               Eigen::Index K_max);

// Fitted envelope constants (C1, C2) for the operator's classification.
// Mild laws are measured against the coordinate index k = 1..K_max (paired
// layouts only move the constants); severe laws are measured against the
// frequency, since the flat cos/sin pairs cannot be bracketed by a
// coordinate-index law once beta > 1.  Throws invalid_argument for custom
// classification.
std::pair<double, double> envelope_constants(const SpectralOperator& op);

// Rows of an orthonormal analysis family expanded over the SVD basis.
// rows[r] lists (0-based svd position, coefficient); finite support per row.
struct BasisMap {
  using Row = std::vector<std::pair<Eigen::Index, double>>;
  std::vector<Row> rows;

  Eigen::Index row_count() const { return static_cast<Eigen::Index>(rows.size()); }
  // Largest referenced svd position + 1 (minimum K_max the map needs).
  Eigen::Index required_kmax() const;
  // Checks pairwise orthonormality of the rows up to `tol`.
  void validate_orthonormal(double tol = 1e-10) const;
};

BasisMap identity_basis_map(Eigen::Index rows);

// delta_k = min |rho_i| over the union of the supports of rows 1..k.
double ill_posedness_delta(const BasisMap& bm, const SpectralOperator& op,
                           Eigen::Index k);

struct Observation {
  Eigen::ArrayXd y;
  double n = 1.0;          // noise level 1/sqrt(n); n == 0 means "no data"
  std::uint64_t seed = 0;

  // Flat-likelihood observation used by prior-recovery diagnostics.
  static Observation flat(Eigen::Index K_max);
};

// Draws y_k = rho_k f0_k + z_k / sqrt(n).  f0 must share the operator's
// K_max and live in the SVD basis.
Observation simulate_observation(const SequenceVector& f0,
                                 const SpectralOperator& op, double n,
                                 std::uint64_t seed);

// || A f ||_2 = sqrt(sum rho_k^2 f_k^2); the natural "downstairs" norm for
// both decay regimes.
double operator_weak_norm(const SequenceVector& f, const SpectralOperator& op);
double operator_weak_norm(const Eigen::ArrayXd& coeffs, const SpectralOperator& op);

}  // namespace cbench
