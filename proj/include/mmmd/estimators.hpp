#pragma once

#include "mmmd/kernels.hpp"

namespace mmmd {

/// Vector of unbiased MMD^2 estimates, one per kernel of a collection.
/// Entries may be negative.
struct MmdVector {
  Vector values;
  Index m = 0;
  Index n = 0;
};

/// Squared distances within and between two samples, computed once and
/// shared by every kernel of a collection.
struct PairwiseDistances {
  Matrix xx;
  Matrix yy;
  Matrix xy;

  static PairwiseDistances compute(const Sample& x, const Sample& y);
};

double mmd2_unbiased(const KernelSpec& spec, const Sample& x, const Sample& y);

MmdVector mmd2_vector(const KernelCollection& coll, const Sample& x, const Sample& y);
MmdVector mmd2_vector(const KernelCollection& coll, const PairwiseDistances& dists);

/// Unbiased MMD^2 from already evaluated Gram blocks.
double mmd2_from_grams(const Matrix& kxx, const Matrix& kyy, const Matrix& kxy);

/// Two-sample U-statistic form with the core
///   h(x, x', y, y') = K(x,x') + K(y,y') - K(x,y') - K(x',y),
/// summed over i1 != i2, j1 != j2. O(m^2 n^2); refuses m or n above
/// kUStatOracleMaxSize. Intended as an independent check only.
double mmd2_ustat_oracle(const KernelSpec& spec, const Sample& x, const Sample& y);

inline constexpr Index kUStatOracleMaxSize = 50;

}  // namespace mmmd
