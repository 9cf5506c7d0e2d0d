#include "mmmd/estimators.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "mmmd/error.hpp"

namespace mmmd {
namespace {

void check_pair(const Sample& x, const Sample& y) {
  if (x.dim() != y.dim())
    throw InputError("dimension mismatch between samples: " + std::to_string(x.dim()) + " vs " +
                     std::to_string(y.dim()));
}

constexpr Index kTile = 64;

// Kernel values of a block of squared distances, computed column by column.
template <class Block>
Eigen::ArrayXXd profile(const KernelSpec& spec, const Block& sq) {
  Eigen::ArrayXXd out(sq.rows(), sq.cols());
  for (Index j = 0; j < sq.cols(); ++j)
    kernel_profile(spec, sq.data() + j * sq.outerStride(), out.col(j).data(), static_cast<std::size_t>(sq.rows()));
  return out;
}

// Sum of off-diagonal entries of a square block.
double off_diagonal_sum(const Matrix& k) { return k.sum() - k.diagonal().sum(); }

// Sum of all entries. Square blocks are summed as diagonal plus symmetric
// pairs, which makes the result exactly invariant under transposition.
double block_sum(const Matrix& k) {
  if (k.rows() != k.cols()) return k.sum();
  double diag = 0.0;
  double off = 0.0;
  for (Index j = 0; j < k.cols(); ++j) {
    diag += k(j, j);
    double col = 0.0;
    for (Index i = 0; i < j; ++i) col += k(i, j) + k(j, i);
    off += col;
  }
  return diag + off;
}

// Sum over i != j of K(d_ij) for an exactly symmetric distance matrix,
// evaluated on the strict upper triangle only.
double kernel_within_sum(const KernelSpec& spec, const Matrix& sq) {
  Vector buffer(sq.rows());
  double total = 0.0;
  for (Index j = 1; j < sq.cols(); ++j) {
    kernel_profile(spec, sq.col(j).data(), buffer.data(), static_cast<std::size_t>(j));
    total += buffer.head(j).sum();
  }
  return 2.0 * total;
}

// Sum of K(d_ij) over a cross block. Square blocks pair tile (I, J) with the
// transpose of tile (J, I) before summing, so the result is exactly invariant
// under transposition, as in block_sum.
double kernel_cross_sum(const KernelSpec& spec, const Matrix& sq) {
  if (sq.rows() != sq.cols()) {
    Vector buffer(sq.rows());
    double total = 0.0;
    for (Index j = 0; j < sq.cols(); ++j) {
      kernel_profile(spec, sq.col(j).data(), buffer.data(), static_cast<std::size_t>(sq.rows()));
      total += buffer.sum();
    }
    return total;
  }
  const Index m = sq.rows();
  double total = 0.0;
  for (Index j0 = 0; j0 < m; j0 += kTile) {
    const Index tj = std::min(kTile, m - j0);
    for (Index i0 = 0; i0 < j0; i0 += kTile) {
      const Index ti = std::min(kTile, m - i0);
      const Eigen::ArrayXXd pair = profile(spec, sq.block(i0, j0, ti, tj)) +
                                   profile(spec, sq.block(j0, i0, tj, ti)).transpose();
      total += pair.sum();
    }
    const Eigen::ArrayXXd diag_tile = profile(spec, sq.block(j0, j0, tj, tj));
    double tile = diag_tile.matrix().trace();
    for (Index j = 1; j < tj; ++j)
      for (Index i = 0; i < j; ++i) tile += diag_tile(i, j) + diag_tile(j, i);
    total += tile;
  }
  return total;
}

// Squared distances between rows [r0, r0 + tr) of a and rows [c0, c0 + tc)
// of b (both column-major), written column-major into `out`. Coordinate
// differences make d(x, y) and d(y, x) round identically.
void tile_distances(const Matrix& a, Index r0, Index tr, const Matrix& b, Index c0, Index tc,
                    double* out) {
  Eigen::Map<Matrix> d(out, tr, tc);
  d.setZero();
  for (Index j = 0; j < tc; ++j)
    for (Index k = 0; k < a.cols(); ++k)
      d.col(j).array() += (a.col(k).segment(r0, tr).array() - b(c0 + j, k)).square();
}

// Sum over i != j of K_a(x_i, x_j) for every kernel, from the upper triangle.
Vector fused_within_sums(const KernelCollection& coll, const Matrix& x) {
  const Index m = x.rows();
  const auto r = static_cast<Index>(coll.size());
  Vector sums = Vector::Zero(r);
  std::vector<double> dist(static_cast<std::size_t>(kTile * kTile));
  std::vector<double> kern(dist.size());
  for (Index j0 = 0; j0 < m; j0 += kTile) {
    const Index tj = std::min(kTile, m - j0);
    for (Index i0 = 0; i0 <= j0; i0 += kTile) {
      const Index ti = std::min(kTile, m - i0);
      tile_distances(x, i0, ti, x, j0, tj, dist.data());
      for (Index a = 0; a < r; ++a) {
        kernel_profile(coll[static_cast<std::size_t>(a)], dist.data(), kern.data(),
                       static_cast<std::size_t>(ti * tj));
        const Eigen::Map<const Matrix> k(kern.data(), ti, tj);
        double tile = 0.0;
        if (i0 == j0) {
          for (Index j = 1; j < tj; ++j) tile += k.col(j).head(j).sum();
        } else {
          tile = k.sum();
        }
        sums[a] += tile;
      }
    }
  }
  return 2.0 * sums;
}

// Sum of K_a(x_i, y_j) over all pairs for every kernel. With m = n, tile
// (I, J) is paired with the transpose of tile (J, I), so exchanging x and y
// reproduces every partial sum exactly.
Vector fused_cross_sums(const KernelCollection& coll, const Matrix& x, const Matrix& y) {
  const Index m = x.rows();
  const Index n = y.rows();
  const auto r = static_cast<Index>(coll.size());
  Vector sums = Vector::Zero(r);
  const auto tile_size = static_cast<std::size_t>(kTile * kTile);
  std::vector<double> d1(tile_size), d2(tile_size), k1(tile_size), k2(tile_size);

  if (m != n) {
    for (Index j0 = 0; j0 < n; j0 += kTile) {
      const Index tj = std::min(kTile, n - j0);
      for (Index i0 = 0; i0 < m; i0 += kTile) {
        const Index ti = std::min(kTile, m - i0);
        tile_distances(x, i0, ti, y, j0, tj, d1.data());
        for (Index a = 0; a < r; ++a) {
          kernel_profile(coll[static_cast<std::size_t>(a)], d1.data(), k1.data(),
                         static_cast<std::size_t>(ti * tj));
          sums[a] += Eigen::Map<const Matrix>(k1.data(), ti, tj).sum();
        }
      }
    }
    return sums;
  }

  for (Index j0 = 0; j0 < m; j0 += kTile) {
    const Index tj = std::min(kTile, m - j0);
    for (Index i0 = 0; i0 < j0; i0 += kTile) {
      const Index ti = std::min(kTile, m - i0);
      tile_distances(x, i0, ti, y, j0, tj, d1.data());
      tile_distances(x, j0, tj, y, i0, ti, d2.data());
      for (Index a = 0; a < r; ++a) {
        const auto& spec = coll[static_cast<std::size_t>(a)];
        kernel_profile(spec, d1.data(), k1.data(), static_cast<std::size_t>(ti * tj));
        kernel_profile(spec, d2.data(), k2.data(), static_cast<std::size_t>(ti * tj));
        const Eigen::Map<const Matrix> upper(k1.data(), ti, tj);
        const Eigen::Map<const Matrix> lower(k2.data(), tj, ti);
        sums[a] += (upper + lower.transpose()).sum();
      }
    }
    tile_distances(x, j0, tj, y, j0, tj, d1.data());
    for (Index a = 0; a < r; ++a) {
      kernel_profile(coll[static_cast<std::size_t>(a)], d1.data(), k1.data(),
                     static_cast<std::size_t>(tj * tj));
      const Eigen::Map<const Matrix> k(k1.data(), tj, tj);
      double tile = k.trace();
      for (Index j = 1; j < tj; ++j)
        for (Index i = 0; i < j; ++i) tile += k(i, j) + k(j, i);
      sums[a] += tile;
    }
  }
  return sums;
}

}  // namespace

PairwiseDistances PairwiseDistances::compute(const Sample& x, const Sample& y) {
  check_pair(x, y);
  return {squared_distances(x.data()), squared_distances(y.data()),
          cross_squared_distances(x.data(), y.data())};
}

double mmd2_from_grams(const Matrix& kxx, const Matrix& kyy, const Matrix& kxy) {
  const auto m = static_cast<double>(kxx.rows());
  const auto n = static_cast<double>(kyy.rows());
  const double within_x = off_diagonal_sum(kxx) / (m * (m - 1.0));
  const double within_y = off_diagonal_sum(kyy) / (n * (n - 1.0));
  const double between = block_sum(kxy) / (m * n);
  return within_x + within_y - 2.0 * between;
}

MmdVector mmd2_vector(const KernelCollection& coll, const PairwiseDistances& dists) {
  MmdVector out{Vector(static_cast<Index>(coll.size())), dists.xx.rows(), dists.yy.rows()};
  for (std::size_t a = 0; a < coll.size(); ++a) {
    const KernelSpec& spec = coll[a];
    const auto m = static_cast<double>(dists.xx.rows());
    const auto n = static_cast<double>(dists.yy.rows());
    out.values[static_cast<Index>(a)] = kernel_within_sum(spec, dists.xx) / (m * (m - 1.0)) +
                                        kernel_within_sum(spec, dists.yy) / (n * (n - 1.0)) -
                                        2.0 * kernel_cross_sum(spec, dists.xy) / (m * n);
  }
  return out;
}

MmdVector mmd2_vector(const KernelCollection& coll, const Sample& x, const Sample& y) {
  check_pair(x, y);
  const Matrix xc = x.data();
  const Matrix yc = y.data();
  const auto m = static_cast<double>(x.rows());
  const auto n = static_cast<double>(y.rows());
  MmdVector out{Vector(static_cast<Index>(coll.size())), x.rows(), y.rows()};
  out.values = fused_within_sums(coll, xc) / (m * (m - 1.0)) +
               fused_within_sums(coll, yc) / (n * (n - 1.0)) -
               2.0 * fused_cross_sums(coll, xc, yc) / (m * n);
  return out;
}

double mmd2_unbiased(const KernelSpec& spec, const Sample& x, const Sample& y) {
  return mmd2_vector(KernelCollection({spec}), x, y).values[0];
}

double mmd2_ustat_oracle(const KernelSpec& spec, const Sample& x, const Sample& y) {
  check_pair(x, y);
  const Index m = x.rows();
  const Index n = y.rows();
  if (m > kUStatOracleMaxSize || n > kUStatOracleMaxSize)
    throw InputError("mmd2_ustat_oracle refuses samples larger than " +
                     std::to_string(kUStatOracleMaxSize) + " rows");

  Matrix kxx(m, m), kyy(n, n), kxy(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) kxx(i, j) = eval_kernel(spec, x.row(i), x.row(j));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) kyy(i, j) = eval_kernel(spec, y.row(i), y.row(j));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) kxy(i, j) = eval_kernel(spec, x.row(i), y.row(j));

  long double total = 0.0L;
  for (Index i1 = 0; i1 < m; ++i1) {
    for (Index i2 = 0; i2 < m; ++i2) {
      if (i1 == i2) continue;
      for (Index j1 = 0; j1 < n; ++j1) {
        for (Index j2 = 0; j2 < n; ++j2) {
          if (j1 == j2) continue;
          total += kxx(i1, i2) + kyy(j1, j2) - kxy(i1, j2) - kxy(i2, j1);
        }
      }
    }
  }
  const auto denom = static_cast<long double>(m) * (m - 1) * n * (n - 1);
  return static_cast<double>(total / denom);
}

}  // namespace mmmd
