#include "mmmd/sample.hpp"

#include <cmath>
#include <string>

#include "mmmd/error.hpp"

namespace mmmd {

Sample::Sample(RowMatrix data) : data_(std::move(data)) {
  if (data_.cols() < 1) throw InputError("sample must have dimension d >= 1");
  if (data_.rows() < 2)
    throw InputError("need m >= 2 observations, got " + std::to_string(data_.rows()));
  if (!data_.allFinite()) {
    for (Index i = 0; i < data_.rows(); ++i)
      for (Index j = 0; j < data_.cols(); ++j)
        if (!std::isfinite(data_(i, j)))
          throw InputError("non-finite value at row " + std::to_string(i + 1) + ", column " +
                           std::to_string(j + 1));
  }
}

Sample Sample::pooled(const Sample& a, const Sample& b) {
  if (a.dim() != b.dim())
    throw InputError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()));
  RowMatrix z(a.rows() + b.rows(), a.dim());
  z.topRows(a.rows()) = a.data();
  z.bottomRows(b.rows()) = b.data();
  return Sample(std::move(z));
}

}  // namespace mmmd
