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

#ifndef CONVLOWER_CONSTRUCT_H_
#define CONVLOWER_CONSTRUCT_H_

#include <optional>
#include <vector>

#include "convlower/network.h"
#include "convlower/tensor.h"

namespace convlower {

// Shallow net -> one conv layer with a (2 floor(d/2) + 1)^2 kernel.
// Row n of W becomes output channel n; the readout picks the read pixel
// (floor(d/2), floor(d/2)) of every channel, where the kernel never touches
// padding. For even d the last kernel row and column are zero.
// Throws DimensionMismatch if W does not have d^2 columns.
BigKernelNet lift_shallow(const ShallowNet& net, int d);

// Big-kernel layer -> classic stack of 3x3 layers: hidden kernels are the
// shift stages of lower_kernel, the last kernel is its terminal. Hidden
// biases come from interval bounds over [-box, box]^{d x d} so that every
// hidden ReLU is the identity there; the last bias absorbs the constant
// offset of the affine hidden stack.
// Throws DomainTooSmall if d < 3 and SoundnessFailure if the offset is not
// constant between two points of the box.
DeepNet lower_to_deep(const BigKernelNet& big, const PaddingMode& pad,
                      double box);

// lift_shallow followed by lower_to_deep.
DeepNet build_classic(const ShallowNet& net, const PaddingMode& pad);

// Channel schedule of the residual builders: c_0 = 1, c_l = (4l+1)^2 for
// l < L, c_L = last_channels; L = d/4.
std::vector<int> residual_widths(int d, int last_channels);
// Inner width C_l = 2(4l-1)^2, l = 1..L.
int residual_inner_width(int l);

// R^l with ones on the diagonal up to min(c_{l-1}, c_l).
std::vector<Kernel4> identity_like_skips(const std::vector<int>& widths);

// Residual builders. `given_r` fixes R^1..R^L (1x1, c_{l-1} x c_l); when
// absent identity_like_skips is used. The output equals the shallow net on
// its box. Throws InvalidDimension if d % 4 != 0, ShapeMismatch if a given
// R has the wrong shape, DimensionMismatch if W does not have d^2 columns.
DeepNet build_resnet(const ShallowNet& net, const PaddingMode& pad,
                     const std::optional<std::vector<Kernel4>>& given_r = {});
// c_L = N + 2: two extra channels cancel the residual leak of the last block.
DeepNet build_preact_resnet(
    const ShallowNet& net, const PaddingMode& pad,
    const std::optional<std::vector<Kernel4>>& given_r = {});
// Pre-act construction rewritten as MgNet blocks with theta = 0 and A
// negated (MgNet subtracts A * f where pre-act adds it).
DeepNet build_mgnet(const ShallowNet& net, const PaddingMode& pad,
                    const std::optional<std::vector<Kernel4>>& given_r = {});

// Auxiliary channels of a PreAct/MgNet net built above, at the read pixel:
// aux_plus = relu(l(x)), aux_minus = relu(-l(x)) and the leak
// l(x) = a . V(R^L * f^{L-1}(x)).
struct LeakProbe {
  double aux_plus = 0.0;
  double aux_minus = 0.0;
  double leak = 0.0;
};
LeakProbe probe_leak(const DeepNet& net, const Tensor3& x);

// Opt-in helpers for residual builders when d % 4 != 0: embed the image in
// a larger zero frame at offset ((new_d - d) / 2, (new_d - d) / 2), and the
// matching shallow net whose W ignores the added border.
Tensor3 zero_pad_input(const Tensor3& x, int new_d);
ShallowNet zero_pad_shallow(const ShallowNet& net, int new_d);
int next_multiple_of_four(int d);

}  // namespace convlower

#endif  // CONVLOWER_CONSTRUCT_H_
