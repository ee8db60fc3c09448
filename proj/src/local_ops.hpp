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

#include "misalign/quantum.hpp"

namespace misalign::detail {

/// In-place application of a single-qubit operator to `party` of an n-qubit
/// state vector (party 0 is the most significant bit).
inline void apply_local(CVector& v, int n, int party, const Matrix2c& op) {
  const Eigen::Index stride = Eigen::Index{1} << (n - 1 - party);
  for (Eigen::Index base = 0; base < v.size(); base += 2 * stride) {
    for (Eigen::Index off = 0; off < stride; ++off) {
      const Eigen::Index i0 = base + off;
      const Eigen::Index i1 = i0 + stride;
      const cplx a = v(i0), b = v(i1);
      v(i0) = op(0, 0) * a + op(0, 1) * b;
      v(i1) = op(1, 0) * a + op(1, 1) * b;
    }
  }
}

}  // namespace misalign::detail
