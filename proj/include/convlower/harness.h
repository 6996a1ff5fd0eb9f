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

#ifndef CONVLOWER_HARNESS_H_
#define CONVLOWER_HARNESS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "convlower/kernel_decompose.h"
#include "convlower/network.h"
#include "convlower/tensor.h"

namespace convlower {

// Naive quadruple-loop convolution, written independently of conv2d and
// used as ground truth. Same contract and summation order (p, s, t).
Tensor3 oracle_conv(const Kernel4& kernel, const Tensor3& x,
                    const PaddingMode& pad);

// Counter-based SplitMix64: draw i of stream `seed` is
// mix(seed + (i + 1) * 0x9E3779B97F4A7C15), where mix is the SplitMix64
// finalizer. Doubles take the top 53 bits.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z);
  std::uint64_t at(std::uint64_t index) const;
  std::uint64_t next() { return at(counter_++); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Random helpers on top of CounterRng; entries uniform in [-scale, scale].
Tensor3 random_tensor(CounterRng& rng, int channels, int d, double scale = 1.0);
Kernel4 random_kernel(CounterRng& rng, int in, int out, int k,
                      double scale = 1.0);
ShallowNet random_shallow(CounterRng& rng, int d, int hidden, double box = 1.0);

using Evaluator = std::function<double(const Tensor3&)>;
// Minimum pre-activation per certified-linear ReLU site for one input.
using LinearityProbe = std::function<std::vector<double>(const Tensor3&)>;

LinearityProbe linearity_probe(const DeepNet& net);

struct CertifyConfig {
  int d = 0;
  double box = 1.0;
  int samples = 200;  // random draws; the corners and zero are always added
  std::uint64_t seed = 0;
  double tolerance = 1e-8;
  std::vector<std::string> pad_modes;  // labels only
  double linearity_floor = -1e-12;
};

struct EquivalenceReport {
  int samples = 0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // |f - g| / (1 + |g|)
  std::vector<std::string> pad_modes;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  bool pass = false;
  int linearity_violations = 0;
  std::vector<int> per_layer_violations;
};

// Compares f against the reference g on +box*1, -box*1, 0 and
// config.samples uniform draws in the box. Samples are evaluated in
// parallel; the reduction is sequential, so equal seeds give equal reports.
EquivalenceReport certify_equivalence(const Evaluator& f, const Evaluator& g,
                                      const CertifyConfig& config,
                                      const LinearityProbe& probe = {});

// Sample set used by certify_equivalence.
std::vector<Tensor3> certification_inputs(const CertifyConfig& config);

struct AuditReport {
  int k = 0;
  std::vector<int> stage_widths;
  int terminal_rows = 0;
  std::vector<std::vector<int>> pattern_census;  // per n: corner, boundary, full
  std::vector<std::string> checks;               // passed checks, in order
};

// Structural audit of a plan: widths (2n+1)^2, one-hot shift blocks placed
// by the prefix map, pattern census (4n^2, 4n, 1), prefix closure and
// lexicographic order. Throws AuditFailure listing every violation.
AuditReport audit_plan(const LoweredPlan& plan);

struct LayerParams {
  std::string name;
  long long count = 0;
};

struct ParamCount {
  int d = 0;
  int hidden = 0;
  long long n_f = 0;          // N (d^2 + 2)
  long long n_c = 0;          // entries of the constructed CNN
  long long n_c_formula = 0;  // closed-form display for the classic schedule
  long long bound = 0;        // 2 (d^5 + N d^2)
  bool within_bound = false;
  std::vector<LayerParams> layers;
};

// Shallow net: only N_F and the bound are meaningful.
ParamCount count_params(const ShallowNet& net);
// Exact count of every kernel entry, bias and readout weight.
ParamCount count_params(const DeepNet& net, int hidden);
// Classic depth/width schedule for (d, N) without building a net.
ParamCount count_classic_schedule(int d, int hidden);

struct PaddingProbeReport {
  int k = 0;
  int d = 0;
  int samples = 0;
  std::uint64_t seed = 0;
  double reflection_max_abs_err = 0.0;
  double reflection_border_max_err = 0.0;
  double reflection_interior_max_err = 0.0;
  double periodic_max_abs_err = 0.0;
  bool reflection_rejected = false;
  bool negative_confirmed = false;  // reflection breaks, periodic holds
};

// Runs the lowered cascade under a harness-local reflection padding and
// reports its disagreement with the big kernel, plus a periodic control.
PaddingProbeReport negative_padding_probe(const Kernel4& kernel, int d,
                                          std::uint64_t seed = 0,
                                          int samples = 5);

}  // namespace convlower

#endif  // CONVLOWER_HARNESS_H_
