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

#include "convlower/construct.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "convlower/bounds.h"
#include "convlower/errors.h"
#include "convlower/kernel_decompose.h"
#include "convlower/ops.h"

namespace convlower {
namespace {

// Fixed interior point of the box used to cross-check affine offsets.
Tensor3 probe_point(int d, double box) {
  Tensor3 x(1, d);
  auto data = x.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = box * (static_cast<double>((i * 7919 + 3) % 13) / 6.0 - 1.0);
  }
  return x;
}

using FeatureFn = std::function<Tensor3(const Tensor3&)>;

// B = preact(x) - K * x, read at x = 0 and checked at a second point of the
// box. Constant only while every hidden ReLU stays linear.
Tensor3 recover_offset(const FeatureFn& preact, const Kernel4& big, int d,
                       const PaddingMode& pad, double box) {
  const Tensor3 zero(1, d);
  const Tensor3 x1 = probe_point(d, box);
  const Tensor3 b0 = preact(zero) - conv2d(big, zero, pad);
  const Tensor3 b1 = preact(x1) - conv2d(big, x1, pad);
  const double tol = 1e-9 * std::max(1.0, max_abs(b0));
  const double gap = max_abs_diff(b0, b1);
  if (!(gap <= tol)) {
    throw SoundnessFailure("constant offset differs by " + std::to_string(gap) +
                           " between two points of the box (tolerance " +
                           std::to_string(tol) + ")");
  }
  return b0;
}

BiasVec final_bias(const BiasVec& beta, const Tensor3& offset, int d) {
  BiasVec b(beta.size());
  const int r = read_pixel(d);
  for (std::size_t n = 0; n < beta.size(); ++n) {
    b[n] = beta[n] - offset.at(static_cast<int>(n), r, r);
  }
  return b;
}

void require_residual_dims(const ShallowNet& net) {
  net.validate();
  if (net.d % 4 != 0) {
    throw InvalidDimension("residual builders need d % 4 == 0, got d=" +
                           std::to_string(net.d) +
                           " (zero_pad_shallow/zero_pad_input can enlarge it)");
  }
}

std::vector<Kernel4> resolve_skips(
    const std::optional<std::vector<Kernel4>>& given_r,
    const std::vector<int>& widths) {
  if (!given_r) return identity_like_skips(widths);
  const std::size_t blocks = widths.size() - 1;
  if (given_r->size() != blocks) {
    throw ShapeMismatch("expected " + std::to_string(blocks) +
                        " residual kernels R, got " +
                        std::to_string(given_r->size()));
  }
  for (std::size_t l = 0; l < blocks; ++l) {
    const Kernel4& r = (*given_r)[l];
    if (r.half_width() != 0 || r.in_channels() != widths[l] ||
        r.out_channels() != widths[l + 1]) {
      throw ShapeMismatch("R[" + std::to_string(l) + "] must be " +
                          std::to_string(widths[l]) + "x" +
                          std::to_string(widths[l + 1]) + "x1x1, got " +
                          std::to_string(r.in_channels()) + "x" +
                          std::to_string(r.out_channels()) + "x" +
                          std::to_string(r.spatial()) + "x" +
                          std::to_string(r.spatial()));
    }
  }
  return *given_r;
}

// A^l = [K^{2l-1}; I; 0]: the lowered stage plus an identity copy of f^{l-1}.
Kernel4 stacked_inner(const Kernel4& stage, int wide) {
  const int cin = stage.in_channels();
  const int mid = stage.out_channels();
  Kernel4 a(cin, wide, 1);
  for (int p = 0; p < cin; ++p) {
    for (int q = 0; q < mid; ++q) a.set_slice(p, q, stage.slice(p, q));
    a.at(p, mid + p, 0, 0) = 1.0;
  }
  return a;
}

// B^l = [K^{2l}, -R^l, 0]. With skip == nullptr the identity part is zero.
Kernel4 stacked_outer(const Kernel4& stage, int cin, int wide,
                      const Kernel4* skip) {
  const int mid = stage.in_channels();
  const int cout = stage.out_channels();
  Kernel4 b(wide, cout, 1);
  for (int p = 0; p < mid; ++p) {
    for (int q = 0; q < cout; ++q) b.set_slice(p, q, stage.slice(p, q));
  }
  if (skip != nullptr) {
    for (int p = 0; p < cin; ++p) {
      for (int q = 0; q < cout; ++q) {
        b.at(mid + p, q, 0, 0) = -skip->at(p, q, 0, 0);
      }
    }
  }
  return b;
}

Tensor3 run_blocks(const DeepNet& partial, const Tensor3& x) {
  return feature_map(partial, x);
}

struct ResidualPlan {
  BigKernelNet big;
  LoweredPlan plan;
  std::vector<Kernel4> classic;  // K^1..K^{d/2}
  std::vector<int> widths;
  std::vector<Kernel4> skips;
};

ResidualPlan prepare_residual(const ShallowNet& net, const PaddingMode& pad,
                              int last_channels,
                              const std::optional<std::vector<Kernel4>>& given_r) {
  require_residual_dims(net);
  ResidualPlan rp;
  rp.big = lift_shallow(net, net.d);
  rp.plan = lower_kernel(rp.big.kernel, net.d, pad);
  rp.classic = rp.plan.stages;
  rp.classic.push_back(rp.plan.terminal);
  rp.widths = residual_widths(net.d, last_channels);
  rp.skips = resolve_skips(given_r, rp.widths);
  return rp;
}

// Builds blocks 1..L-1 and the inner half of block L (A^L, a^L). Returns
// the bounds of f^{L-1}.
ChannelBounds build_hidden_blocks(DeepNet& out, const ResidualPlan& rp,
                                  double box) {
  const int depth = static_cast<int>(rp.widths.size()) - 1;
  ChannelBounds f = box_bounds(1, box);
  for (int l = 1; l <= depth; ++l) {
    const int wide = residual_inner_width(l);
    ResidualBlock blk;
    blk.inner = stacked_inner(rp.classic[2 * l - 2], wide);
    const ChannelBounds inner = conv_bounds(blk.inner, f, out.pad);
    blk.inner_bias = linearizing_bias(inner);
    const ChannelBounds hidden = shift(inner, blk.inner_bias);
    blk.skip = rp.skips[l - 1];
    if (l == depth) {
      out.blocks.push_back(std::move(blk));
      break;
    }
    blk.outer = stacked_outer(rp.classic[2 * l - 1], rp.widths[l - 1], wide,
                              &blk.skip);
    const ChannelBounds through = conv_bounds(blk.outer, hidden, out.pad);
    if (out.arch == Architecture::kResNet) {
      const ChannelBounds pre = conv_bounds(blk.skip, f, out.pad) + through;
      blk.outer_bias = linearizing_bias(pre);
      f = relu(shift(pre, blk.outer_bias));
    } else {
      blk.outer_bias = linearizing_bias(through);
      f = conv_bounds(blk.skip, f, out.pad) +
          relu(shift(through, blk.outer_bias));
    }
    out.blocks.push_back(std::move(blk));
  }
  return f;
}

// f^{L-1}(x) using the finished blocks 1..L-1 of `out`.
Tensor3 penultimate(const DeepNet& out, const Tensor3& x) {
  DeepNet partial;
  partial.arch = out.arch;
  partial.d = out.d;
  partial.pad = out.pad;
  partial.blocks.assign(out.blocks.begin(), out.blocks.end() - 1);
  return run_blocks(partial, x);
}

}  // namespace

BigKernelNet lift_shallow(const ShallowNet& net, int d) {
  net.validate();
  if (net.d != d) {
    throw DimensionMismatch("W has " + std::to_string(net.d * net.d) +
                            " columns, expected d^2 = " + std::to_string(d * d));
  }
  const int h = d / 2;
  BigKernelNet big;
  big.d = d;
  big.kernel = Kernel4(1, net.hidden > 0 ? net.hidden : 1, h);
  for (int n = 0; n < net.hidden; ++n) {
    // Kernel offset (s, t) reads pixel (h+s, h+t); s, t run over -h..h for
    // odd d and -h..h-1 for even d.
    for (int row = 0; row < d; ++row) {
      for (int col = 0; col < d; ++col) {
        big.kernel.at(0, n, row - h, col - h) = net.weight(n, row * d + col);
      }
    }
  }
  big.bias = net.beta;
  big.readout.assign(static_cast<std::size_t>(big.kernel.out_channels()) * d * d,
                     0.0);
  for (int n = 0; n < net.hidden; ++n) big.readout[read_index(n, d)] = net.alpha[n];
  if (net.hidden == 0) big.bias = {0.0};
  return big;
}

DeepNet lower_to_deep(const BigKernelNet& big, const PaddingMode& pad,
                      double box) {
  const int d = big.d;
  if (d < 3) {
    throw DomainTooSmall("deep lowering needs d >= 3, got d=" +
                         std::to_string(d));
  }
  const LoweredPlan plan = lower_kernel(big.kernel, d, pad);

  DeepNet net;
  net.arch = Architecture::kClassic;
  net.d = d;
  net.pad = pad;
  ChannelBounds f = box_bounds(1, box);
  for (const auto& stage : plan.stages) {
    ConvLayer layer{stage, {}};
    const ChannelBounds pre = conv_bounds(stage, f, pad);
    layer.bias = linearizing_bias(pre);
    f = relu(shift(pre, layer.bias));
    net.layers.push_back(std::move(layer));
  }

  const std::vector<ConvLayer> hidden = net.layers;
  const FeatureFn preact = [&](const Tensor3& x) {
    Tensor3 g = x;
    for (const auto& layer : hidden) {
      g = relu(add_bias(conv2d(layer.kernel, g, pad), layer.bias));
    }
    return conv2d(plan.terminal, g, pad);
  };
  const Tensor3 offset = recover_offset(preact, big.kernel, d, pad, box);
  net.layers.push_back({plan.terminal, final_bias(big.bias, offset, d)});
  net.readout = big.readout;
  return net;
}

DeepNet build_classic(const ShallowNet& net, const PaddingMode& pad) {
  return lower_to_deep(lift_shallow(net, net.d), pad, net.box);
}

std::vector<int> residual_widths(int d, int last_channels) {
  const int depth = (d / 2) / 2;
  std::vector<int> widths{1};
  for (int l = 1; l < depth; ++l) widths.push_back((4 * l + 1) * (4 * l + 1));
  if (depth >= 1) widths.push_back(last_channels);
  return widths;
}

int residual_inner_width(int l) { return 2 * (4 * l - 1) * (4 * l - 1); }

std::vector<Kernel4> identity_like_skips(const std::vector<int>& widths) {
  std::vector<Kernel4> skips;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Kernel4 r(widths[l], widths[l + 1], 0);
    for (int p = 0; p < std::min(widths[l], widths[l + 1]); ++p) {
      r.at(p, p, 0, 0) = 1.0;
    }
    skips.push_back(std::move(r));
  }
  return skips;
}

DeepNet build_resnet(const ShallowNet& net, const PaddingMode& pad,
                     const std::optional<std::vector<Kernel4>>& given_r) {
  const int N = std::max(net.hidden, 1);
  const ResidualPlan rp = prepare_residual(net, pad, N, given_r);
  DeepNet out;
  out.arch = Architecture::kResNet;
  out.d = net.d;
  out.pad = pad;
  build_hidden_blocks(out, rp, net.box);

  const int depth = static_cast<int>(out.blocks.size());
  ResidualBlock& last = out.blocks.back();
  last.outer = stacked_outer(rp.classic[2 * depth - 1], rp.widths[depth - 1],
                             residual_inner_width(depth), &last.skip);
  const FeatureFn preact = [&](const Tensor3& x) {
    const Tensor3 f = penultimate(out, x);
    const Tensor3 hidden =
        relu(add_bias(conv2d(last.inner, f, pad), last.inner_bias));
    return conv2d(last.skip, f, pad) + conv2d(last.outer, hidden, pad);
  };
  const Tensor3 offset = recover_offset(preact, rp.big.kernel, net.d, pad, net.box);
  last.outer_bias = final_bias(rp.big.bias, offset, net.d);
  out.readout = rp.big.readout;
  return out;
}

DeepNet build_preact_resnet(const ShallowNet& net, const PaddingMode& pad,
                            const std::optional<std::vector<Kernel4>>& given_r) {
  const int N = net.hidden;
  const int d = net.d;
  const ResidualPlan rp = prepare_residual(net, pad, N + 2, given_r);
  DeepNet out;
  out.arch = Architecture::kPreAct;
  out.d = d;
  out.pad = pad;
  build_hidden_blocks(out, rp, net.box);
  const int depth = static_cast<int>(out.blocks.size());

  // Readout: alpha on the first N channels, then -1 / +1 on the two
  // auxiliary channels so that a . V(f^L) = l + f_N - (relu(l) - relu(-l)).
  out.readout.assign(static_cast<std::size_t>(N + 2) * d * d, 0.0);
  for (int n = 0; n < N; ++n) out.readout[read_index(n, d)] = net.alpha[n];
  out.readout[read_index(N, d)] = -1.0;
  out.readout[read_index(N + 1, d)] = 1.0;

  // Leak l(x) = a . V(R^L * f^{L-1}(x)) is affine on the box.
  ResidualBlock& last = out.blocks.back();
  const auto leak = [&](const Tensor3& x) {
    return dot(out.readout, conv2d(last.skip, penultimate(out, x), pad).data());
  };
  const Tensor3 zero(1, d);
  const double c = leak(zero);
  std::vector<double> h(static_cast<std::size_t>(d) * d);
  double scale = std::abs(c);
  for (std::size_t i = 0; i < h.size(); ++i) {
    Tensor3 e(1, d);
    e.data()[i] = net.box;
    h[i] = (leak(e) - c) / net.box;
    scale += std::abs(h[i]) * net.box;
  }
  {
    const Tensor3 x1 = probe_point(d, net.box);
    const double predicted = dot(h, x1.data()) + c;
    const double gap = std::abs(leak(x1) - predicted);
    if (!(gap <= 1e-9 * std::max(1.0, scale))) {
      throw SoundnessFailure("residual leak is not affine on the box (gap " +
                             std::to_string(gap) + ")");
    }
  }

  // Shallow net extended with the rows h and -h, biases c and -c.
  ShallowNet extended = net;
  extended.hidden = N + 2;
  extended.W.insert(extended.W.end(), h.begin(), h.end());
  for (double v : h) extended.W.push_back(-v);
  extended.beta.push_back(c);
  extended.beta.push_back(-c);
  extended.alpha.push_back(-1.0);
  extended.alpha.push_back(1.0);
  const BigKernelNet big = lift_shallow(extended, d);
  const LoweredPlan plan = lower_kernel(big.kernel, d, pad);

  last.outer = stacked_outer(plan.terminal, rp.widths[depth - 1],
                             residual_inner_width(depth), nullptr);
  const FeatureFn preact = [&](const Tensor3& x) {
    const Tensor3 f = penultimate(out, x);
    const Tensor3 hidden =
        relu(add_bias(conv2d(last.inner, f, pad), last.inner_bias));
    return conv2d(last.outer, hidden, pad);
  };
  const Tensor3 offset = recover_offset(preact, big.kernel, d, pad, net.box);
  last.outer_bias = final_bias(big.bias, offset, d);
  return out;
}

DeepNet build_mgnet(const ShallowNet& net, const PaddingMode& pad,
                    const std::optional<std::vector<Kernel4>>& given_r) {
  DeepNet out = build_preact_resnet(net, pad, given_r);
  out.arch = Architecture::kMgNet;
  for (auto& blk : out.blocks) {
    for (double& v : blk.inner.data()) v = -v;
    blk.theta = Kernel4(1, blk.inner.out_channels(), 1);
  }
  return out;
}

LeakProbe probe_leak(const DeepNet& net, const Tensor3& x) {
  if (net.arch != Architecture::kPreAct && net.arch != Architecture::kMgNet) {
    throw ShapeMismatch("leak probe needs a preact or mgnet net");
  }
  ForwardTrace trace;
  trace.capture_last = true;
  feature_map(net, x, &trace);
  const int aux = net.output_channels() - 2;
  const int r = read_pixel(net.d);
  LeakProbe probe;
  probe.aux_plus = trace.last_activation->at(aux, r, r);
  probe.aux_minus = trace.last_activation->at(aux + 1, r, r);
  probe.leak = dot(net.readout, trace.last_skip->data());
  return probe;
}

int next_multiple_of_four(int d) { return (d + 3) / 4 * 4; }

Tensor3 zero_pad_input(const Tensor3& x, int new_d) {
  if (new_d < x.size()) {
    throw InvalidDimension("cannot shrink " + std::to_string(x.size()) +
                           " to " + std::to_string(new_d));
  }
  const int off = (new_d - x.size()) / 2;
  Tensor3 out(x.channels(), new_d);
  for (int c = 0; c < x.channels(); ++c) {
    for (int m = 0; m < x.size(); ++m) {
      for (int n = 0; n < x.size(); ++n) out.at(c, m + off, n + off) = x.at(c, m, n);
    }
  }
  return out;
}

ShallowNet zero_pad_shallow(const ShallowNet& net, int new_d) {
  net.validate();
  if (new_d < net.d) {
    throw InvalidDimension("cannot shrink " + std::to_string(net.d) + " to " +
                           std::to_string(new_d));
  }
  const int off = (new_d - net.d) / 2;
  ShallowNet out = net;
  out.d = new_d;
  out.W.assign(static_cast<std::size_t>(net.hidden) * new_d * new_d, 0.0);
  for (int n = 0; n < net.hidden; ++n) {
    for (int m = 0; m < net.d; ++m) {
      for (int c = 0; c < net.d; ++c) {
        out.W[(static_cast<std::size_t>(n) * new_d + m + off) * new_d + c + off] =
            net.weight(n, m * net.d + c);
      }
    }
  }
  return out;
}

}  // namespace convlower
