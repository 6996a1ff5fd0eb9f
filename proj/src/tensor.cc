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

#include "convlower/tensor.h"

#include <algorithm>
#include <charconv>
#include <string>
#include <utility>

#include "convlower/errors.h"

namespace convlower {

AuditFailure::AuditFailure(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "AuditFailure:";
        for (const auto& v : violations) msg += " [" + v + "]";
        return msg;
      }()),
      violations_(std::move(violations)) {}

Tensor3::Tensor3(int channels, int d)
    : channels_(channels), d_(d) {
  if (channels <= 0 || d <= 0) {
    throw ShapeMismatch("tensor needs positive channels and size, got " +
                        std::to_string(channels) + "x" + std::to_string(d));
  }
  data_.assign(static_cast<std::size_t>(channels) * d * d, 0.0);
}

Tensor3::Tensor3(int channels, int d, std::vector<double> data)
    : Tensor3(channels, d) {
  if (data.size() != data_.size()) {
    throw ShapeMismatch("tensor data length " + std::to_string(data.size()) +
                        " != " + std::to_string(data_.size()));
  }
  data_ = std::move(data);
}

Tensor3 Tensor3::from_shape(int channels, int height, int width,
                            std::vector<double> data) {
  if (height != width) {
    throw ShapeMismatch("only square inputs are supported, got " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
  return Tensor3(channels, height, std::move(data));
}

Kernel4::Kernel4(int in_channels, int out_channels, int half_width)
    : in_(in_channels), out_(out_channels), k_(half_width) {
  if (in_channels <= 0 || out_channels <= 0 || half_width < 0) {
    throw InvalidKernel("kernel needs positive channels and k >= 0");
  }
  const std::size_t w = spatial();
  data_.assign(static_cast<std::size_t>(in_) * out_ * w * w, 0.0);
}

Kernel4::Kernel4(int in_channels, int out_channels, int half_width,
                 std::vector<double> data)
    : Kernel4(in_channels, out_channels, half_width) {
  if (data.size() != data_.size()) {
    throw ShapeMismatch("kernel data length " + std::to_string(data.size()) +
                        " != " + std::to_string(data_.size()));
  }
  data_ = std::move(data);
}

Kernel4 Kernel4::from_shape(int in_channels, int out_channels, int height,
                            int width, std::vector<double> data) {
  if (height != width) {
    throw InvalidKernel("kernel must be square, got " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
  if (height % 2 == 0) {
    throw InvalidKernel("kernel spatial size must be odd, got " +
                        std::to_string(height));
  }
  return Kernel4(in_channels, out_channels, (height - 1) / 2, std::move(data));
}

Kernel4 Kernel4::slice(int p, int q) const {
  Kernel4 out(1, 1, k_);
  const std::size_t w2 = static_cast<std::size_t>(spatial()) * spatial();
  std::copy_n(data_.begin() + index(p, q, -k_, -k_), w2, out.data_.begin());
  return out;
}

void Kernel4::set_slice(int p, int q, const Kernel4& block) {
  if (block.in_ != 1 || block.out_ != 1 || block.k_ != k_) {
    throw ShapeMismatch("slice must be a single-channel kernel of k=" +
                        std::to_string(k_));
  }
  std::copy(block.data_.begin(), block.data_.end(),
            data_.begin() + index(p, q, -k_, -k_));
}

bool Kernel4::slice_is_zero(int p, int q) const {
  const std::size_t w2 = static_cast<std::size_t>(spatial()) * spatial();
  const auto first = data_.begin() + index(p, q, -k_, -k_);
  return std::all_of(first, first + w2, [](double v) { return v == 0.0; });
}

std::string PaddingMode::name() const {
  switch (kind) {
    case Kind::kConstant: {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof(buf), value);
      return "constant(" + std::string(buf, res.ptr) + ")";
    }
    case Kind::kPeriodic:
      return "periodic";
    case Kind::kReflection:
      return "reflection";
    case Kind::kReplication:
      return "replication";
  }
  return "unknown";
}

}  // namespace convlower
