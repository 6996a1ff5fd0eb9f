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

#include "convlower/network.h"

#include <algorithm>
#include <limits>
#include <string>

#include "convlower/errors.h"
#include "convlower/ops.h"

namespace convlower {
namespace {

void require_input(const DeepNet& net, const Tensor3& x) {
  if (x.channels() != 1 || x.size() != net.d) {
    throw ShapeMismatch("network expects a 1x" + std::to_string(net.d) + "x" +
                        std::to_string(net.d) + " input, got " +
                        std::to_string(x.channels()) + "x" +
                        std::to_string(x.size()));
  }
}

double min_entry(const Tensor3& t) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : t.data()) m = std::min(m, v);
  return m;
}

void record(ForwardTrace* trace, const Tensor3& preact) {
  if (trace != nullptr) trace->linear_site_min.push_back(min_entry(preact));
}

Tensor3 classic_features(const DeepNet& net, const Tensor3& x,
                         ForwardTrace* trace) {
  Tensor3 f = x;
  const int depth = static_cast<int>(net.layers.size());
  for (int l = 0; l < depth; ++l) {
    const auto& layer = net.layers[l];
    Tensor3 pre = add_bias(conv2d(layer.kernel, f, net.pad), layer.bias);
    if (l + 1 < depth) record(trace, pre);
    f = relu(pre);
  }
  return f;
}

Tensor3 block_features(const DeepNet& net, const Tensor3& x,
                       ForwardTrace* trace) {
  Tensor3 f = x;
  const int depth = static_cast<int>(net.blocks.size());
  for (int l = 0; l < depth; ++l) {
    const auto& blk = net.blocks[l];
    const bool last = l + 1 == depth;
    Tensor3 inner_pre;
    if (net.arch == Architecture::kMgNet) {
      if (!blk.theta) throw ShapeMismatch("MgNet block without theta");
      inner_pre = add_bias(conv2d(*blk.theta, x, net.pad) -
                               conv2d(blk.inner, f, net.pad),
                           blk.inner_bias);
    } else {
      inner_pre = add_bias(conv2d(blk.inner, f, net.pad), blk.inner_bias);
    }
    record(trace, inner_pre);
    const Tensor3 hidden = relu(inner_pre);
    Tensor3 skip = conv2d(blk.skip, f, net.pad);
    if (net.arch == Architecture::kResNet) {
      Tensor3 pre = add_bias(skip + conv2d(blk.outer, hidden, net.pad),
                             blk.outer_bias);
      if (!last) record(trace, pre);
      f = relu(pre);
    } else {
      Tensor3 pre = add_bias(conv2d(blk.outer, hidden, net.pad), blk.outer_bias);
      if (!last) record(trace, pre);
      Tensor3 act = relu(pre);
      if (last && trace != nullptr && trace->capture_last) {
        trace->last_skip = skip;
        trace->last_activation = act;
      }
      f = skip + act;
    }
  }
  return f;
}

}  // namespace

void ShallowNet::validate() const {
  if (d <= 0 || hidden < 0) {
    throw DimensionMismatch("shallow net needs d > 0 and N >= 0");
  }
  const std::size_t cols = static_cast<std::size_t>(d) * d;
  if (W.size() != cols * hidden) {
    throw DimensionMismatch("W has " + std::to_string(W.size()) +
                            " entries, expected N*d^2 = " +
                            std::to_string(cols * hidden));
  }
  if (beta.size() != static_cast<std::size_t>(hidden) ||
      alpha.size() != static_cast<std::size_t>(hidden)) {
    throw DimensionMismatch("beta/alpha must have N = " +
                            std::to_string(hidden) + " entries");
  }
  if (!(box > 0.0)) throw DimensionMismatch("box half-width must be positive");
}

double ShallowNet::evaluate(std::span<const double> v) const {
  const std::size_t cols = static_cast<std::size_t>(d) * d;
  if (v.size() != cols) {
    throw DimensionMismatch("input has " + std::to_string(v.size()) +
                            " entries, expected d^2 = " + std::to_string(cols));
  }
  double out = 0.0;
  for (int n = 0; n < hidden; ++n) {
    double pre = beta[n];
    for (std::size_t i = 0; i < cols; ++i) pre += W[n * cols + i] * v[i];
    out += alpha[n] * (pre > 0.0 ? pre : 0.0);
  }
  return out;
}

double ShallowNet::evaluate(const Tensor3& x) const {
  if (x.channels() != 1) throw DimensionMismatch("shallow net input must have one channel");
  return evaluate(x.data());
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeMismatch("dot of lengths " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double forward_big(const BigKernelNet& net, const Tensor3& x,
                   const PaddingMode& pad) {
  const Tensor3 f = relu(add_bias(conv2d(net.kernel, x, pad), net.bias));
  return dot(net.readout, f.data());
}

std::string architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::kClassic: return "classic";
    case Architecture::kResNet: return "resnet";
    case Architecture::kPreAct: return "preact";
    case Architecture::kMgNet: return "mgnet";
  }
  return "unknown";
}

Architecture parse_architecture(const std::string& tag) {
  if (tag == "classic") return Architecture::kClassic;
  if (tag == "resnet") return Architecture::kResNet;
  if (tag == "preact") return Architecture::kPreAct;
  if (tag == "mgnet") return Architecture::kMgNet;
  throw ParseError("unknown architecture '" + tag +
                   "' (expected classic|resnet|preact|mgnet)");
}

int DeepNet::output_channels() const {
  if (arch == Architecture::kClassic) {
    return layers.empty() ? 1 : layers.back().kernel.out_channels();
  }
  return blocks.empty() ? 1 : blocks.back().outer.out_channels();
}

void DeepNet::validate() const {
  if (d <= 0) throw ShapeMismatch("network size d must be positive");
  int channels = 1;
  auto expect = [](bool ok, const std::string& msg) {
    if (!ok) throw ShapeMismatch(msg);
  };
  if (arch == Architecture::kClassic) {
    expect(blocks.empty(), "classic net must not carry residual blocks");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      const std::string at = "layers[" + std::to_string(l) + "]";
      expect(layer.kernel.in_channels() == channels,
             at + ".kernel input channels " +
                 std::to_string(layer.kernel.in_channels()) + " != " +
                 std::to_string(channels));
      expect(layer.bias.size() ==
                 static_cast<std::size_t>(layer.kernel.out_channels()),
             at + ".bias length mismatch");
      channels = layer.kernel.out_channels();
    }
  } else {
    expect(layers.empty(), "residual net must not carry classic layers");
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      const auto& b = blocks[l];
      const std::string at = "layers[" + std::to_string(l) + "]";
      const int wide = b.inner.out_channels();
      const int out = b.outer.out_channels();
      expect(b.inner.in_channels() == channels, at + ".A input channels");
      expect(b.inner_bias.size() == static_cast<std::size_t>(wide),
             at + ".a length mismatch");
      expect(b.outer.in_channels() == wide, at + ".B input channels");
      expect(b.outer_bias.size() == static_cast<std::size_t>(out),
             at + ".b length mismatch");
      expect(b.skip.half_width() == 0, at + ".R must be 1x1");
      expect(b.skip.in_channels() == channels && b.skip.out_channels() == out,
             at + ".R shape must be " + std::to_string(channels) + "x" +
                 std::to_string(out));
      if (arch == Architecture::kMgNet) {
        expect(b.theta.has_value(), at + ".theta missing");
        expect(b.theta->in_channels() == 1 && b.theta->out_channels() == wide,
               at + ".theta shape must be 1x" + std::to_string(wide));
      }
      channels = out;
    }
  }
  expect(readout.size() == static_cast<std::size_t>(channels) * d * d,
         "readout length " + std::to_string(readout.size()) +
             " != c_L*d^2 = " + std::to_string(channels * d * d));
}

Tensor3 feature_map(const DeepNet& net, const Tensor3& x, ForwardTrace* trace) {
  require_input(net, x);
  if (net.arch == Architecture::kClassic) return classic_features(net, x, trace);
  return block_features(net, x, trace);
}

double forward_classic(const DeepNet& net, const Tensor3& x,
                       ForwardTrace* trace) {
  if (net.arch != Architecture::kClassic) {
    throw ShapeMismatch("forward_classic called on a " +
                        architecture_name(net.arch) + " net");
  }
  require_input(net, x);
  return dot(net.readout, classic_features(net, x, trace).data());
}

double forward_block(const DeepNet& net, const Tensor3& x,
                     ForwardTrace* trace) {
  if (net.arch == Architecture::kClassic) {
    throw ShapeMismatch("forward_block called on a classic net");
  }
  require_input(net, x);
  return dot(net.readout, block_features(net, x, trace).data());
}

double forward(const DeepNet& net, const Tensor3& x, ForwardTrace* trace) {
  return net.arch == Architecture::kClassic ? forward_classic(net, x, trace)
                                            : forward_block(net, x, trace);
}

}  // namespace convlower
