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

#ifndef CONVLOWER_BOUNDS_H_
#define CONVLOWER_BOUNDS_H_

#include <vector>

#include "convlower/network.h"
#include "convlower/tensor.h"

namespace convlower {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double magnitude() const;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// One interval per channel, valid for every pixel of that channel.
using ChannelBounds = std::vector<Interval>;

ChannelBounds box_bounds(int channels, double half_width);

// Sound enclosure of K * X for every X inside `in`. Weights are split by
// sign; off-center taps under constant padding also admit the pad value.
// Results are widened outward to cover floating-point rounding.
ChannelBounds conv_bounds(const Kernel4& kernel, const ChannelBounds& in,
                          const PaddingMode& pad);

ChannelBounds shift(const ChannelBounds& in, const BiasVec& b);
ChannelBounds relu(const ChannelBounds& in);
ChannelBounds operator+(const ChannelBounds& a, const ChannelBounds& b);

// Per-channel shift that makes every value of `pre` non-negative:
// max(|lo|, |hi|), an upper bound of sup |.| over the enclosure.
BiasVec linearizing_bias(const ChannelBounds& pre);

struct LayerBounds {
  ChannelBounds pre;   // K^l * f^{l-1} (without bias)
  ChannelBounds post;  // relu(pre + b^l)
};

// Interval propagation through a classic stack.
std::vector<LayerBounds> propagate_bounds(const std::vector<ConvLayer>& layers,
                                          const ChannelBounds& input,
                                          const PaddingMode& pad);

}  // namespace convlower

#endif  // CONVLOWER_BOUNDS_H_
