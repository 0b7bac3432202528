#pragma once

#include <vector>

#include "eventsnn/types.hpp"

namespace eventsnn::detail {

/// Compressed fan-out lists of a weight matrix.
struct FanOut {
  std::vector<int> offsets;  // size rows + 1
  std::vector<int> targets;
  std::vector<double> weights;

  int begin(int row) const { return offsets[row]; }
  int end(int row) const { return offsets[row + 1]; }
};

/// Connections of `w` restricted to `mask` (empty mask: all entries). With
/// `skip_zero` exact zero weights are left out, which does not change the
/// forward dynamics.
inline FanOut build_fan_out(const Matrix& w, const Mask& mask, bool skip_zero) {
  FanOut f;
  f.offsets.reserve(w.rows() + 1);
  f.offsets.push_back(0);
  for (Eigen::Index j = 0; j < w.rows(); ++j) {
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      if (mask.size() != 0 && mask(j, i) == 0) continue;
      if (skip_zero && w(j, i) == 0.0) continue;
      f.targets.push_back(static_cast<int>(i));
      f.weights.push_back(w(j, i));
    }
    f.offsets.push_back(static_cast<int>(f.targets.size()));
  }
  return f;
}

}  // namespace eventsnn::detail
