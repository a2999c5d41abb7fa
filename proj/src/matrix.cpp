#include "orbitsig/matrix.hpp"

#include "orbitsig/error.hpp"

namespace orbitsig {

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw Error(ErrorCode::kDimensionMismatch, "row has " + std::to_string(values.size()) +
                                                   " values, matrix has " +
                                                   std::to_string(cols_) + " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

}  // namespace orbitsig
