#pragma once

// Coefficient sequences.  Everything in the library lives in the coordinates
// of an orthonormal basis of L2; a SequenceVector is a finite prefix of such
// a coordinate sequence together with a tag naming the basis it refers to.
//
// Indexing convention: arrays are 0-based, but the mathematical coordinate
// index k is 1-based, so the k-th coordinate sits at coeffs[k-1] and all
// index-dependent weights use k = i + 1.

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace cbench {

enum class BasisTag { svd, wavelet };

inline const char* to_string(BasisTag t) {
  return t == BasisTag::svd ? "svd" : "wavelet";
}

struct SequenceVector {
  Eigen::ArrayXd coeffs;
  BasisTag basis_tag = BasisTag::svd;

  SequenceVector() = default;
  explicit SequenceVector(Eigen::ArrayXd c, BasisTag tag = BasisTag::svd)
      : coeffs(std::move(c)), basis_tag(tag) {
    if (!coeffs.allFinite())
      throw std::invalid_argument("SequenceVector: coefficients must be finite");
  }

  Eigen::Index size() const { return coeffs.size(); }
};

// Coordinate vector with a single unit entry at 1-based position k.
inline SequenceVector unit_sequence(Eigen::Index size, Eigen::Index k,
                                    BasisTag tag = BasisTag::svd) {
  if (k < 1 || k > size) throw std::invalid_argument("unit_sequence: k out of range");
  Eigen::ArrayXd c = Eigen::ArrayXd::Zero(size);
  c[k - 1] = 1.0;
  return SequenceVector(std::move(c), tag);
}

}  // namespace cbench
