#include "mmmd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "mmmd/error.hpp"

namespace mmmd {

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::Gaussian ? "gauss" : "lap";
}

KernelSpec::KernelSpec(KernelFamily f, double bw) : family(f), bandwidth(bw) {
  if (!(bw > 0.0) || !std::isfinite(bw))
    throw ConfigError("kernel bandwidth must be positive and finite");
}

KernelCollection::KernelCollection(std::vector<KernelSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw ConfigError("kernel collection must contain at least one kernel");
  std::set<std::pair<int, double>> seen;
  for (const auto& s : specs_) {
    if (!(s.bandwidth > 0.0) || !std::isfinite(s.bandwidth))
      throw ConfigError("kernel bandwidth must be positive and finite");
    if (!seen.emplace(static_cast<int>(s.family), s.bandwidth).second)
      throw ConfigError("kernel collection contains duplicate (family, bandwidth) pairs");
  }
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                   const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  if (x.size() != y.size()) throw InputError("eval_kernel: dimension mismatch");
  double sq = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    sq += diff * diff;
  }
  if (spec.family == KernelFamily::Gaussian)
    return std::exp(-sq / (spec.bandwidth * spec.bandwidth));
  return std::exp(-std::sqrt(sq) / spec.bandwidth);
}

namespace {

// Up to this dimension distances are formed from coordinate differences,
// which is exact in the sense that d(x, y) and d(y, x) round identically.
constexpr Index kDirectMaxDim = 16;
constexpr Index kTile = 64;

void mirror_upper(Matrix& d) {
  const Index m = d.rows();
  for (Index j0 = 0; j0 < m; j0 += kTile) {
    const Index tj = std::min(kTile, m - j0);
    for (Index i0 = 0; i0 < j0; i0 += kTile) {
      const Index ti = std::min(kTile, m - i0);
      d.block(j0, i0, tj, ti) = d.block(i0, j0, ti, tj).transpose();
    }
    for (Index j = j0; j < j0 + tj; ++j)
      for (Index i = j0; i < j; ++i) d(j, i) = d(i, j);
  }
}

Matrix direct_squared_distances(const RowMatrix& a) {
  const Index m = a.rows();
  const Matrix cols = a;  // column-major copy: coordinate k is contiguous
  Matrix d(m, m);
  for (Index j = 0; j < m; ++j) {
    auto head = d.col(j).head(j);
    head.setZero();
    for (Index k = 0; k < a.cols(); ++k)
      head.array() += (cols.col(k).head(j).array() - cols(j, k)).square();
    d(j, j) = 0.0;
  }
  mirror_upper(d);
  return d;
}

Matrix direct_cross_distances(const RowMatrix& a, const RowMatrix& b) {
  const Matrix cols = a;
  Matrix d = Matrix::Zero(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index k = 0; k < a.cols(); ++k)
      d.col(j).array() += (cols.col(k).array() - b(j, k)).square();
  return d;
}

}  // namespace

Matrix squared_distances(const RowMatrix& a) {
  if (a.cols() <= kDirectMaxDim) return direct_squared_distances(a);
  const Index m = a.rows();
  const RowMatrix centred = a.rowwise() - a.colwise().mean();
  const Vector norms = centred.rowwise().squaredNorm();
  Matrix inner = Matrix::Zero(m, m);
  inner.selfadjointView<Eigen::Upper>().rankUpdate(centred);

  Matrix d(m, m);
  for (Index j = 0; j < m; ++j) {
    d.col(j).head(j) =
        ((norms.head(j).array() + norms[j]) - 2.0 * inner.col(j).head(j).array()).cwiseMax(0.0);
    d(j, j) = 0.0;
  }
  mirror_upper(d);
  return d;
}

Matrix cross_squared_distances(const RowMatrix& a, const RowMatrix& b) {
  if (a.cols() != b.cols()) throw InputError("cross distances: dimension mismatch");
  if (a.cols() <= kDirectMaxDim) return direct_cross_distances(a, b);
  // Equal-shape blocks are evaluated in a canonical orientation so that
  // swapping the arguments yields the exact transpose.
  if (a.rows() == b.rows() &&
      std::lexicographical_compare(b.data(), b.data() + b.size(), a.data(), a.data() + a.size())) {
    const Matrix t = cross_squared_distances(b, a);
    Matrix d(t.cols(), t.rows());
    for (Index j0 = 0; j0 < t.cols(); j0 += kTile)
      for (Index i0 = 0; i0 < t.rows(); i0 += kTile) {
        const Index tj = std::min(kTile, t.cols() - j0);
        const Index ti = std::min(kTile, t.rows() - i0);
        d.block(j0, i0, tj, ti) = t.block(i0, j0, ti, tj).transpose();
      }
    return d;
  }
  const Eigen::RowVectorXd shift =
      (a.colwise().sum() + b.colwise().sum()) / static_cast<double>(a.rows() + b.rows());
  const RowMatrix ac = a.rowwise() - shift;
  const RowMatrix bc = b.rowwise() - shift;
  const Vector na = ac.rowwise().squaredNorm();
  const Vector nb = bc.rowwise().squaredNorm();
  Matrix d = -2.0 * (ac * bc.transpose());
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return d.cwiseMax(0.0);
}

void kernel_profile(const KernelSpec& spec, const double* sq_dists, double* out, std::size_t n) {
  constexpr std::size_t kChunk = 64;
  using Chunk = Eigen::Array<double, static_cast<int>(kChunk), 1>;
  alignas(64) double buffer[kChunk];
  const double gauss_scale = -1.0 / (spec.bandwidth * spec.bandwidth);
  const double lap_scale = -1.0 / spec.bandwidth;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    std::copy_n(sq_dists + start, len, buffer);
    std::fill(buffer + len, buffer + kChunk, 0.0);
    Eigen::Map<Chunk, Eigen::Aligned64> chunk(buffer);
    if (spec.family == KernelFamily::Gaussian)
      chunk = (chunk * gauss_scale).exp();
    else
      chunk = (chunk.sqrt() * lap_scale).exp();
    std::copy_n(buffer, len, out + start);
  }
}

Matrix kernel_from_squared_distances(const KernelSpec& spec, const Matrix& sq_dists) {
  Matrix out(sq_dists.rows(), sq_dists.cols());
  kernel_profile(spec, sq_dists.data(), out.data(), static_cast<std::size_t>(sq_dists.size()));
  return out;
}

GramMatrix gram_matrix(const KernelSpec& spec, const Sample& s) {
  return {kernel_from_squared_distances(spec, squared_distances(s.data())), spec};
}

Matrix cross_gram(const KernelSpec& spec, const Sample& x, const Sample& y) {
  return kernel_from_squared_distances(spec, cross_squared_distances(x.data(), y.data()));
}

double median_heuristic(const Sample& pooled) {
  const Index n = pooled.rows();
  const Index d = pooled.dim();
  const RowMatrix& z = pooled.data();
  std::vector<double> sq;
  sq.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double diff = z(i, k) - z(j, k);
        acc += diff * diff;
      }
      sq.push_back(acc);
    }
  }
  const std::size_t count = sq.size();
  const std::size_t upper = count / 2;
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(upper), sq.end());
  double median = sq[upper];
  if (count % 2 == 0) {
    const double lower = *std::max_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(upper));
    median = 0.5 * (lower + median);
  }
  if (!(median > 0.0)) throw InputError("degenerate pooled sample; bandwidth undefined");
  return std::sqrt(median);
}

CenteredGram center_gram(const Matrix& k) {
  const Index m = k.rows();
  if (k.cols() != m) throw InputError("center_gram: matrix must be square");
  const double inv_m = 1.0 / static_cast<double>(m);
  const Vector means = k.colwise().sum().transpose() * inv_m;
  const double grand = means.sum() * inv_m;
  Matrix out(m, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < m; ++i) out(i, j) = (k(i, j) - (means[i] + means[j]) + grand) * inv_m;
  return {std::move(out)};
}

CenteredGram center_gram(const GramMatrix& g) { return center_gram(g.values); }

BandwidthPreset parse_bandwidth_preset(std::string_view name) {
  static constexpr std::pair<std::string_view, BandwidthPreset> kNames[] = {
      {"gauss-mmmd", BandwidthPreset::GaussMMMD},
      {"lap-mmmd", BandwidthPreset::LapMMMD},
      {"mixed-mmmd", BandwidthPreset::MixedMMMD},
      {"gauss-mmd", BandwidthPreset::GaussMMD},
      {"lap-mmd", BandwidthPreset::LapMMD},
      {"highdim-gauss", BandwidthPreset::HighDimGauss},
      {"highdim-lap", BandwidthPreset::HighDimLap},
      {"highdim-mixed", BandwidthPreset::HighDimMixed},
  };
  for (const auto& [key, value] : kNames)
    if (key == name) return value;
  throw ConfigError("unknown bandwidth preset '" + std::string(name) + "'");
}

std::string_view to_string(BandwidthPreset preset) {
  switch (preset) {
    case BandwidthPreset::GaussMMMD: return "gauss-mmmd";
    case BandwidthPreset::LapMMMD: return "lap-mmmd";
    case BandwidthPreset::MixedMMMD: return "mixed-mmmd";
    case BandwidthPreset::GaussMMD: return "gauss-mmd";
    case BandwidthPreset::LapMMD: return "lap-mmd";
    case BandwidthPreset::HighDimGauss: return "highdim-gauss";
    case BandwidthPreset::HighDimLap: return "highdim-lap";
    case BandwidthPreset::HighDimMixed: return "highdim-mixed";
  }
  return "unknown";
}

KernelCollection bandwidth_grid(BandwidthPreset preset, double median_bandwidth) {
  if (!(median_bandwidth > 0.0) || !std::isfinite(median_bandwidth))
    throw ConfigError("median bandwidth must be positive and finite");
  const double r2 = std::sqrt(2.0);
  const std::vector<double> five = {0.5, 1.0 / r2, 1.0, r2, 2.0};
  const std::vector<double> three = {1.0 / r2, 1.0, r2};
  const std::vector<double> five_hd = {1.0 / (2.0 * r2), 0.5, 1.0 / r2, 1.0, r2};
  const std::vector<double> four_hd = {0.5, 1.0 / r2, 1.0, r2};

  std::vector<KernelSpec> specs;
  auto add = [&](KernelFamily f, const std::vector<double>& multipliers) {
    for (double c : multipliers) specs.emplace_back(f, c * median_bandwidth);
  };
  switch (preset) {
    case BandwidthPreset::GaussMMMD: add(KernelFamily::Gaussian, five); break;
    case BandwidthPreset::LapMMMD: add(KernelFamily::Laplace, five); break;
    case BandwidthPreset::MixedMMMD:
      add(KernelFamily::Gaussian, three);
      add(KernelFamily::Laplace, three);
      break;
    case BandwidthPreset::GaussMMD: add(KernelFamily::Gaussian, {1.0}); break;
    case BandwidthPreset::LapMMD: add(KernelFamily::Laplace, {1.0}); break;
    case BandwidthPreset::HighDimGauss: add(KernelFamily::Gaussian, five_hd); break;
    case BandwidthPreset::HighDimLap: add(KernelFamily::Laplace, five_hd); break;
    case BandwidthPreset::HighDimMixed:
      add(KernelFamily::Gaussian, four_hd);
      add(KernelFamily::Laplace, four_hd);
      break;
  }
  return KernelCollection(std::move(specs));
}

}  // namespace mmmd
