// Copyright 2026 The misalign-tomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include <Eigen/Core>

namespace misalign::detail {

/// Contracts mode `mode` of a row-major tensor (mode 0 outermost) with `m`:
/// y[.., r, ..] = sum_i m(r, i) x[.., i, ..]. Updates `dims` in place.
template <typename Scalar, typename MatrixT>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mode_product(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                                                      std::vector<int>& dims, int mode, const MatrixT& m) {
  long outer = 1, inner = 1;
  for (int j = 0; j < mode; ++j) outer *= dims[j];
  for (int j = mode + 1; j < static_cast<int>(dims.size()); ++j) inner *= dims[j];
  const long in_dim = dims[mode];
  const long out_dim = m.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(outer * out_dim * inner);
  for (long o = 0; o < outer; ++o)
    for (long r = 0; r < out_dim; ++r)
      for (long i = 0; i < in_dim; ++i) {
        const Scalar w = static_cast<Scalar>(m(r, i));
        if (w == Scalar(0)) continue;
        const long src = (o * in_dim + i) * inner;
        const long dst = (o * out_dim + r) * inner;
        for (long t = 0; t < inner; ++t) y(dst + t) += w * x(src + t);
      }
  dims[mode] = static_cast<int>(out_dim);
  return y;
}

}  // namespace misalign::detail
