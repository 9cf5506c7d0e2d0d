#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mmmd/sample.hpp"

namespace mmmd {

enum class KernelFamily { Gaussian, Laplace };

std::string_view to_string(KernelFamily family);

/// A translation-invariant kernel:
///   Gaussian  exp(-|x-y|^2 / bandwidth^2)
///   Laplace   exp(-|x-y| / bandwidth)
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double bandwidth = 1.0;

  KernelSpec() = default;
  KernelSpec(KernelFamily f, double bw);

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Ordered list of r >= 1 pairwise distinct kernels.
class KernelCollection {
 public:
  explicit KernelCollection(std::vector<KernelSpec> specs);

  [[nodiscard]] std::size_t size() const noexcept { return specs_.size(); }
  [[nodiscard]] const KernelSpec& operator[](std::size_t a) const { return specs_[a]; }
  [[nodiscard]] const std::vector<KernelSpec>& specs() const noexcept { return specs_; }
  [[nodiscard]] auto begin() const noexcept { return specs_.begin(); }
  [[nodiscard]] auto end() const noexcept { return specs_.end(); }

 private:
  std::vector<KernelSpec> specs_;
};

struct GramMatrix {
  Matrix values;
  KernelSpec spec;
};

/// C K C / m with C = I - 11'/m, i.e. entries K°(X_i, X_j) / m for the
/// empirically centred kernel. Row and column sums vanish.
struct CenteredGram {
  Matrix values;
};

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                   const Eigen::Ref<const Eigen::RowVectorXd>& y);

/// Pairwise squared Euclidean distances of the rows of `a`, via the
/// |x|^2 + |y|^2 - 2<x,y> expansion, clamped at 0. The result is exactly
/// symmetric with a zero diagonal.
Matrix squared_distances(const RowMatrix& a);
/// Squared distances between rows of `a` (rows of the result) and rows of `b`.
Matrix cross_squared_distances(const RowMatrix& a, const RowMatrix& b);

/// Kernel profile of n squared distances. Every value is computed on the same
/// vector path, so it depends only on its input and not on its position.
void kernel_profile(const KernelSpec& spec, const double* sq_dists, double* out, std::size_t n);

/// Applies the kernel profile elementwise to a matrix of squared distances.
Matrix kernel_from_squared_distances(const KernelSpec& spec, const Matrix& sq_dists);

GramMatrix gram_matrix(const KernelSpec& spec, const Sample& s);
Matrix cross_gram(const KernelSpec& spec, const Sample& x, const Sample& y);

/// Square root of the median pairwise squared distance of the pooled sample.
/// An even number of pairs uses the mean of the two central order statistics.
double median_heuristic(const Sample& pooled);

CenteredGram center_gram(const GramMatrix& g);
CenteredGram center_gram(const Matrix& k);

enum class BandwidthPreset {
  GaussMMMD,     // 5 Gaussian, (1/2, 1/sqrt2, 1, sqrt2, 2) * median
  LapMMMD,       // 5 Laplace, same multipliers
  MixedMMMD,     // 3 Gaussian then 3 Laplace, (1/sqrt2, 1, sqrt2) * median
  GaussMMD,      // single Gaussian at the median
  LapMMD,        // single Laplace at the median
  HighDimGauss,  // 5 Gaussian, (1/(2 sqrt2), 1/2, 1/sqrt2, 1, sqrt2) * median
  HighDimLap,    // 5 Laplace, same multipliers
  HighDimMixed,  // 4 Gaussian then 4 Laplace, (1/2, 1/sqrt2, 1, sqrt2) * median
};

BandwidthPreset parse_bandwidth_preset(std::string_view name);
std::string_view to_string(BandwidthPreset preset);

KernelCollection bandwidth_grid(BandwidthPreset preset, double median_bandwidth);

}  // namespace mmmd
