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

#include "convlower/ops.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "convlower/errors.h"

namespace convlower {
namespace {

void check_conv_args(const Kernel4& kernel, const Tensor3& x,
                     const PaddingMode& pad) {
  if (x.channels() != kernel.in_channels()) {
    throw ChannelMismatch("input has " + std::to_string(x.channels()) +
                          " channels, kernel expects " +
                          std::to_string(kernel.in_channels()));
  }
  if (!pad.is_supported()) {
    throw UnsupportedPadding(pad.name() +
                             " padding breaks the kernel decomposition; only "
                             "constant and periodic are implemented");
  }
}

inline int wrap(int i, int d) { return ((i % d) + d) % d; }

// Resolved source index for every (offset, position); -1 marks a padding read.
std::vector<int> offset_table(int k, int d, bool periodic) {
  const int w = 2 * k + 1;
  std::vector<int> table(static_cast<std::size_t>(w) * d);
  for (int s = -k; s <= k; ++s) {
    for (int m = 0; m < d; ++m) {
      const int i = m + s;
      int resolved;
      if (periodic) {
        resolved = wrap(i, d);
      } else {
        resolved = (i >= 0 && i < d) ? i : -1;
      }
      table[static_cast<std::size_t>(s + k) * d + m] = resolved;
    }
  }
  return table;
}

}  // namespace

namespace serial {

Tensor3 conv2d(const Kernel4& kernel, const Tensor3& x,
               const PaddingMode& pad) {
  check_conv_args(kernel, x, pad);
  const int d = x.size();
  const int k = kernel.half_width();
  const bool periodic = pad.kind == PaddingMode::Kind::kPeriodic;
  Tensor3 out(kernel.out_channels(), d);
  for (int q = 0; q < kernel.out_channels(); ++q) {
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) {
        double acc = 0.0;
        for (int p = 0; p < kernel.in_channels(); ++p) {
          for (int s = -k; s <= k; ++s) {
            for (int t = -k; t <= k; ++t) {
              int r = m + s;
              int c = n + t;
              double v;
              if (periodic) {
                v = x.at(p, wrap(r, d), wrap(c, d));
              } else if (r < 0 || r >= d || c < 0 || c >= d) {
                v = pad.value;
              } else {
                v = x.at(p, r, c);
              }
              acc += kernel.at(p, q, s, t) * v;
            }
          }
        }
        out.at(q, m, n) = acc;
      }
    }
  }
  return out;
}

}  // namespace serial

namespace parallel {

Tensor3 conv2d(const Kernel4& kernel, const Tensor3& x,
               const PaddingMode& pad) {
  check_conv_args(kernel, x, pad);
  const int d = x.size();
  const int k = kernel.half_width();
  const int w = kernel.spatial();
  const int cin = kernel.in_channels();
  const int cout = kernel.out_channels();
  const bool periodic = pad.kind == PaddingMode::Kind::kPeriodic;
  const double fill = pad.value;
  const std::vector<int> rows = offset_table(k, d, periodic);

  // Nonzero taps of every output channel, in (p, s, t) order. Skipping a
  // zero weight drops a +-0 term, which never changes a sum that starts at
  // +0.0, so the result still matches the serial kernel bit for bit (for
  // finite inputs).
  struct Tap {
    std::size_t plane_offset;
    int s;
    int t;
    double weight;
  };
  std::vector<std::vector<Tap>> taps(cout);
  long nonzero = 0;
  for (int q = 0; q < cout; ++q) {
    for (int p = 0; p < cin; ++p) {
      for (int s = 0; s < w; ++s) {
        for (int t = 0; t < w; ++t) {
          const double v = kernel.at(p, q, s - k, t - k);
          if (v != 0.0) taps[q].push_back({p * x.plane(), s, t, v});
        }
      }
    }
    nonzero += static_cast<long>(taps[q].size());
  }

  Tensor3 out(cout, d);
  const double* src = x.data().data();
  double* dst = out.data().data();
  const long work = nonzero * d * d;

#pragma omp parallel for collapse(2) schedule(static) if (work > 32768)
  for (int q = 0; q < cout; ++q) {
    for (int m = 0; m < d; ++m) {
      const std::vector<Tap>& list = taps[q];
      for (int n = 0; n < d; ++n) {
        double acc = 0.0;
        for (const Tap& tap : list) {
          const int r = rows[static_cast<std::size_t>(tap.s) * d + m];
          const int c = rows[static_cast<std::size_t>(tap.t) * d + n];
          const double v = (r < 0 || c < 0) ? fill : src[tap.plane_offset + r * d + c];
          acc += tap.weight * v;
        }
        dst[(static_cast<std::size_t>(q) * d + m) * d + n] = acc;
      }
    }
  }
  return out;
}

}  // namespace parallel

Tensor3 conv2d(const Kernel4& kernel, const Tensor3& x,
               const PaddingMode& pad) {
  return parallel::conv2d(kernel, x, pad);
}

void set_num_threads(int n) {
#ifdef _OPENMP
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Tensor3 relu(const Tensor3& x) {
  Tensor3 out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor3 add_bias(const Tensor3& x, const BiasVec& b) {
  if (static_cast<int>(b.size()) != x.channels()) {
    throw ChannelMismatch("bias has " + std::to_string(b.size()) +
                          " entries for " + std::to_string(x.channels()) +
                          " channels");
  }
  Tensor3 out = x;
  const std::size_t plane = x.plane();
  auto data = out.data();
  for (int c = 0; c < x.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) data[c * plane + i] += b[c];
  }
  return out;
}

std::vector<double> vectorize(const Tensor3& x) {
  return {x.data().begin(), x.data().end()};
}

namespace {

void require_same_shape(const Tensor3& a, const Tensor3& b) {
  if (a.channels() != b.channels() || a.size() != b.size()) {
    throw ShapeMismatch("elementwise op on " + std::to_string(a.channels()) +
                        "x" + std::to_string(a.size()) + " and " +
                        std::to_string(b.channels()) + "x" +
                        std::to_string(b.size()));
  }
}

}  // namespace

Tensor3 operator+(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b);
  Tensor3 out = a;
  auto o = out.data();
  auto r = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += r[i];
  return out;
}

Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b);
  Tensor3 out = a;
  auto o = out.data();
  auto r = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= r[i];
  return out;
}

Tensor3 operator-(const Tensor3& a) {
  Tensor3 out = a;
  for (double& v : out.data()) v = -v;
  return out;
}

Tensor3 operator*(double s, const Tensor3& a) {
  Tensor3 out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

double max_abs(const Tensor3& x) {
  double m = 0.0;
  for (double v : x.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b);
  double m = 0.0;
  auto l = a.data();
  auto r = b.data();
  for (std::size_t i = 0; i < l.size(); ++i) {
    m = std::max(m, std::abs(l[i] - r[i]));
  }
  return m;
}

}  // namespace convlower
