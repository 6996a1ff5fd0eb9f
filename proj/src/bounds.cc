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

#include "convlower/bounds.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "convlower/errors.h"

namespace convlower {

double Interval::magnitude() const {
  return std::max(std::abs(lo), std::abs(hi));
}

ChannelBounds box_bounds(int channels, double half_width) {
  return ChannelBounds(channels, Interval{-half_width, half_width});
}

namespace {

// Rounded sum a + b, stepped outward when the rounding moved it inward.
double add_down(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err < 0.0 ? std::nextafter(s, -std::numeric_limits<double>::infinity())
                   : s;
}

double add_up(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err > 0.0 ? std::nextafter(s, std::numeric_limits<double>::infinity())
                   : s;
}

}  // namespace

ChannelBounds conv_bounds(const Kernel4& kernel, const ChannelBounds& in,
                          const PaddingMode& pad) {
  if (static_cast<int>(in.size()) != kernel.in_channels()) {
    throw ChannelMismatch("bounds for " + std::to_string(in.size()) +
                          " channels, kernel expects " +
                          std::to_string(kernel.in_channels()));
  }
  if (!pad.is_supported()) {
    throw UnsupportedPadding(pad.name() + " padding has no bound rule");
  }
  const bool constant = pad.kind == PaddingMode::Kind::kConstant;
  const int k = kernel.half_width();
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  ChannelBounds out(kernel.out_channels());
  for (int q = 0; q < kernel.out_channels(); ++q) {
    double lo = 0.0, hi = 0.0, mag = 0.0;
    long terms = 0;
    bool exact = true;
    const auto accumulate = [&](double& acc, double w, double v) {
      const double prod = w * v;
      exact = exact && std::fma(w, v, -prod) == 0.0;
      const double sum = acc + prod;
      exact = exact && sum - acc == prod && sum - prod == acc;
      acc = sum;
    };
    for (int p = 0; p < kernel.in_channels(); ++p) {
      for (int s = -k; s <= k; ++s) {
        for (int t = -k; t <= k; ++t) {
          const double w = kernel.at(p, q, s, t);
          if (w == 0.0) continue;
          Interval v = in[p];
          if (constant && (s != 0 || t != 0)) {
            v.lo = std::min(v.lo, pad.value);
            v.hi = std::max(v.hi, pad.value);
          }
          if (w > 0.0) {
            accumulate(lo, w, v.lo);
            accumulate(hi, w, v.hi);
          } else {
            accumulate(lo, w, v.hi);
            accumulate(hi, w, v.lo);
          }
          mag += std::abs(w) * v.magnitude();
          ++terms;
        }
      }
    }
    // Widen only when some product or partial sum was rounded.
    const double slack = exact ? 0.0 : 2.0 * (terms + 2) * kEps * mag;
    out[q] = {lo - slack, hi + slack};
  }
  return out;
}

ChannelBounds shift(const ChannelBounds& in, const BiasVec& b) {
  if (b.size() != in.size()) {
    throw ChannelMismatch("bias length " + std::to_string(b.size()) +
                          " != bound channels " + std::to_string(in.size()));
  }
  ChannelBounds out(in.size());
  for (std::size_t q = 0; q < in.size(); ++q) {
    out[q] = {add_down(in[q].lo, b[q]), add_up(in[q].hi, b[q])};
  }
  return out;
}

ChannelBounds relu(const ChannelBounds& in) {
  ChannelBounds out(in.size());
  for (std::size_t q = 0; q < in.size(); ++q) {
    out[q] = {std::max(0.0, in[q].lo), std::max(0.0, in[q].hi)};
  }
  return out;
}

ChannelBounds operator+(const ChannelBounds& a, const ChannelBounds& b) {
  if (a.size() != b.size()) {
    throw ChannelMismatch("adding bounds of " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()) + " channels");
  }
  ChannelBounds out(a.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    out[q] = {add_down(a[q].lo, b[q].lo), add_up(a[q].hi, b[q].hi)};
  }
  return out;
}

BiasVec linearizing_bias(const ChannelBounds& pre) {
  BiasVec b(pre.size());
  for (std::size_t q = 0; q < pre.size(); ++q) b[q] = pre[q].magnitude();
  return b;
}

std::vector<LayerBounds> propagate_bounds(const std::vector<ConvLayer>& layers,
                                          const ChannelBounds& input,
                                          const PaddingMode& pad) {
  std::vector<LayerBounds> out;
  out.reserve(layers.size());
  ChannelBounds current = input;
  for (const auto& layer : layers) {
    LayerBounds lb;
    lb.pre = conv_bounds(layer.kernel, current, pad);
    lb.post = relu(shift(lb.pre, layer.bias));
    current = lb.post;
    out.push_back(std::move(lb));
  }
  return out;
}

}  // namespace convlower
