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

#ifndef CONVLOWER_TENSOR_H_
#define CONVLOWER_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace convlower {

// Feature map of shape channels x d x d, stored channel-major then row-major.
// Indices are 0-based: pixel (m, n) here is pixel (m+1, n+1) in 1-based
// notation.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int channels, int d);
  Tensor3(int channels, int d, std::vector<double> data);

  // Rejects non-square spatial shapes with ShapeMismatch.
  static Tensor3 from_shape(int channels, int height, int width,
                            std::vector<double> data);

  int channels() const { return channels_; }
  int size() const { return d_; }
  std::size_t plane() const { return static_cast<std::size_t>(d_) * d_; }
  std::size_t numel() const { return data_.size(); }

  double& at(int c, int m, int n) { return data_[index(c, m, n)]; }
  double at(int c, int m, int n) const { return data_[index(c, m, n)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> channel(int c) const {
    return std::span<const double>(data_).subspan(c * plane(), plane());
  }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t index(int c, int m, int n) const {
    return (static_cast<std::size_t>(c) * d_ + m) * d_ + n;
  }

  int channels_ = 0;
  int d_ = 0;
  std::vector<double> data_;
};

// Convolution kernel of shape in x out x (2k+1) x (2k+1). Spatial indices are
// centered: at(p, q, 0, 0) is the kernel center and s, t range over -k..k.
class Kernel4 {
 public:
  Kernel4() = default;
  Kernel4(int in_channels, int out_channels, int half_width);
  Kernel4(int in_channels, int out_channels, int half_width,
          std::vector<double> data);

  // Builds from a [cin, cout, ks, ks] shape; ks must be odd and square.
  static Kernel4 from_shape(int in_channels, int out_channels, int height,
                            int width, std::vector<double> data);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int half_width() const { return k_; }
  int spatial() const { return 2 * k_ + 1; }
  std::size_t numel() const { return data_.size(); }

  double& at(int p, int q, int s, int t) { return data_[index(p, q, s, t)]; }
  double at(int p, int q, int s, int t) const {
    return data_[index(p, q, s, t)];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Spatial slice [p, q] as a 1 x 1 kernel of the same half-width.
  Kernel4 slice(int p, int q) const;
  // Writes a single-channel kernel of the same half-width into slot [p, q].
  void set_slice(int p, int q, const Kernel4& block);
  // True if every entry of slot [p, q] is zero.
  bool slice_is_zero(int p, int q) const;

  bool operator==(const Kernel4&) const = default;

 private:
  std::size_t index(int p, int q, int s, int t) const {
    const int w = spatial();
    return ((static_cast<std::size_t>(p) * out_ + q) * w + (s + k_)) * w +
           (t + k_);
  }

  int in_ = 0;
  int out_ = 0;
  int k_ = 0;
  std::vector<double> data_;
};

// Out-of-range read rule. Only Constant and Periodic are accepted by the
// convolution kernels; the other kinds exist so that callers can name them
// and get a precise UnsupportedPadding error.
struct PaddingMode {
  enum class Kind { kConstant, kPeriodic, kReflection, kReplication };

  Kind kind = Kind::kConstant;
  double value = 0.0;  // only meaningful for kConstant

  static PaddingMode constant(double a) { return {Kind::kConstant, a}; }
  static PaddingMode periodic() { return {Kind::kPeriodic, 0.0}; }
  static PaddingMode reflection() { return {Kind::kReflection, 0.0}; }
  static PaddingMode replication() { return {Kind::kReplication, 0.0}; }

  bool is_supported() const {
    return kind == Kind::kConstant || kind == Kind::kPeriodic;
  }
  std::string name() const;

  bool operator==(const PaddingMode&) const = default;
};

// One scalar per output channel, broadcast over the d x d plane.
using BiasVec = std::vector<double>;

}  // namespace convlower

#endif  // CONVLOWER_TENSOR_H_
