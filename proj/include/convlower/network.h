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

#ifndef CONVLOWER_NETWORK_H_
#define CONVLOWER_NETWORK_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convlower/tensor.h"

namespace convlower {

// f_N(v) = alpha . relu(W v + beta) on the box [-box, box]^{d x d}.
struct ShallowNet {
  int d = 0;
  int hidden = 0;         // N
  std::vector<double> W;  // hidden x d^2, row-major
  std::vector<double> beta;
  std::vector<double> alpha;
  double box = 1.0;

  double weight(int n, int i) const {
    return W[static_cast<std::size_t>(n) * d * d + i];
  }
  // Throws DimensionMismatch if the shapes are inconsistent.
  void validate() const;
  double evaluate(std::span<const double> v) const;
  double evaluate(const Tensor3& x) const;
};

// 0-based read pixel used by every construction: floor(d/2) on both axes.
constexpr int read_pixel(int d) { return d / 2; }
// Flat index of (channel, read pixel, read pixel) in vectorize() order.
constexpr std::size_t read_index(int channel, int d) {
  return static_cast<std::size_t>(channel) * d * d +
         static_cast<std::size_t>(read_pixel(d)) * d + read_pixel(d);
}

// One convolution layer with a large kernel: a . V(relu(K * x + b 1)).
struct BigKernelNet {
  int d = 0;
  Kernel4 kernel;  // 1 x N x (2 floor(d/2) + 1)^2
  BiasVec bias;
  std::vector<double> readout;  // N d^2
};

double forward_big(const BigKernelNet& net, const Tensor3& x,
                   const PaddingMode& pad);

enum class Architecture { kClassic, kResNet, kPreAct, kMgNet };

std::string architecture_name(Architecture arch);
// Throws ParseError on an unknown tag.
Architecture parse_architecture(const std::string& tag);

// f^l = relu(K^l * f^{l-1} + b^l 1).
struct ConvLayer {
  Kernel4 kernel;
  BiasVec bias;
};

// One basic block. Which formula applies depends on the architecture:
//   ResNet: f = relu(R*f + B*relu(A*f + a) + b)
//   PreAct: f = R*f + relu(B*relu(A*f + a) + b)
//   MgNet:  f = R*f + relu(B*relu(theta*x - A*f + a) + b)
struct ResidualBlock {
  Kernel4 inner;         // A, c_{l-1} -> C_l, 3x3
  BiasVec inner_bias;    // a^l
  Kernel4 outer;         // B, C_l -> c_l, 3x3
  BiasVec outer_bias;    // b^l
  Kernel4 skip;          // R, c_{l-1} -> c_l, 1x1
  std::optional<Kernel4> theta;  // MgNet only, 1 -> C_l, 3x3
};

// Immutable after construction; evaluation is safe from several threads.
struct DeepNet {
  Architecture arch = Architecture::kClassic;
  int d = 0;
  PaddingMode pad;
  std::vector<ConvLayer> layers;      // Classic
  std::vector<ResidualBlock> blocks;  // ResNet, PreAct, MgNet
  std::vector<double> readout;        // c_L d^2

  int depth() const {
    return static_cast<int>(arch == Architecture::kClassic ? layers.size()
                                                           : blocks.size());
  }
  int output_channels() const;
  // Throws ShapeMismatch when channel counts do not chain.
  void validate() const;
};

// Optional instrumentation for one forward pass.
struct ForwardTrace {
  // Minimum pre-activation at every ReLU whose bias was chosen to keep it
  // linear on the box: Classic layers 1..L-1; the inner ReLU of every
  // residual block and the outer ReLU of blocks 1..L-1.
  std::vector<double> linear_site_min;
  // Filled when capture_last is set: R^L * f^{L-1} and the block's
  // activation term, so that f^L = last_skip + last_activation (PreAct,
  // MgNet).
  bool capture_last = false;
  std::optional<Tensor3> last_skip;
  std::optional<Tensor3> last_activation;
};

// Evaluates a Classic net. Throws ShapeMismatch if x is not 1 x d x d.
double forward_classic(const DeepNet& net, const Tensor3& x,
                       ForwardTrace* trace = nullptr);
// Evaluates a ResNet, PreAct or MgNet net.
double forward_block(const DeepNet& net, const Tensor3& x,
                     ForwardTrace* trace = nullptr);
// Dispatches on net.arch.
double forward(const DeepNet& net, const Tensor3& x,
               ForwardTrace* trace = nullptr);

// Final feature map f^L(x).
Tensor3 feature_map(const DeepNet& net, const Tensor3& x,
                    ForwardTrace* trace = nullptr);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace convlower

#endif  // CONVLOWER_NETWORK_H_
