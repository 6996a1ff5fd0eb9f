// Copyright 2026 The convlower Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONVLOWER_OPS_H_
#define CONVLOWER_OPS_H_

#include <vector>

#include "convlower/tensor.h"

namespace convlower {

// Stride-one multi-channel convolution with "same" output size:
//
//   out[q, m, n] = sum_p sum_{s,t=-k..k} K[p, q, s, t] * X[p, m+s, n+t]
//
// Out-of-range reads return pad.value (Constant) or wrap modulo d (Periodic).
// The accumulation order is fixed (p, then s, then t, starting from +0.0),
// so serial and parallel variants agree bit for bit.
//
// Throws ChannelMismatch if X.channels() != K.in_channels() and
// UnsupportedPadding for reflection/replication.
Tensor3 conv2d(const Kernel4& kernel, const Tensor3& x, const PaddingMode& pad);

namespace serial {
// Reference kernel, kept for testing the parallel path.
Tensor3 conv2d(const Kernel4& kernel, const Tensor3& x, const PaddingMode& pad);
}  // namespace serial

namespace parallel {
// OpenMP kernel over (output channel, row). Same summation order as serial.
Tensor3 conv2d(const Kernel4& kernel, const Tensor3& x, const PaddingMode& pad);
}  // namespace parallel

// Caps OpenMP threads for every parallel kernel; 0 restores the runtime
// default. Has no effect when built without OpenMP.
void set_num_threads(int n);
int max_threads();

Tensor3 relu(const Tensor3& x);

// [q, m, n] -> x[q, m, n] + b[q].
Tensor3 add_bias(const Tensor3& x, const BiasVec& b);

// Channel-major, row-major flattening; index c*d*d + s*d + t (0-based).
std::vector<double> vectorize(const Tensor3& x);

Tensor3 operator+(const Tensor3& a, const Tensor3& b);
Tensor3 operator-(const Tensor3& a, const Tensor3& b);
Tensor3 operator-(const Tensor3& a);
Tensor3 operator*(double s, const Tensor3& a);

double max_abs(const Tensor3& x);
double max_abs_diff(const Tensor3& a, const Tensor3& b);

}  // namespace convlower

#endif  // CONVLOWER_OPS_H_
