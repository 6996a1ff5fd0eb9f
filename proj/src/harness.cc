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

#include "convlower/harness.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "convlower/errors.h"
#include "convlower/ops.h"

namespace convlower {
namespace {

// Reflection ("reflect" mode: the edge pixel is not repeated). Lives only
// here as a falsification instrument; the library rejects this padding.
int reflect_index(int i, int d) {
  if (d == 1) return 0;
  while (i < 0 || i >= d) {
    if (i < 0) i = -i;
    if (i >= d) i = 2 * (d - 1) - i;
  }
  return i;
}

Tensor3 reflect_conv(const Kernel4& kernel, const Tensor3& x) {
  const int d = x.size();
  const int k = kernel.half_width();
  Tensor3 out(kernel.out_channels(), d);
  for (int q = 0; q < kernel.out_channels(); ++q) {
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) {
        double acc = 0.0;
        for (int p = 0; p < kernel.in_channels(); ++p) {
          for (int s = -k; s <= k; ++s) {
            for (int t = -k; t <= k; ++t) {
              acc += kernel.at(p, q, s, t) *
                     x.at(p, reflect_index(m + s, d), reflect_index(n + t, d));
            }
          }
        }
        out.at(q, m, n) = acc;
      }
    }
  }
  return out;
}

int expected_width(int n) { return (2 * n + 1) * (2 * n + 1); }

}  // namespace

Tensor3 oracle_conv(const Kernel4& kernel, const Tensor3& x,
                    const PaddingMode& pad) {
  if (x.channels() != kernel.in_channels()) {
    throw ChannelMismatch("oracle: input channels " +
                          std::to_string(x.channels()) + " != kernel input " +
                          std::to_string(kernel.in_channels()));
  }
  if (pad.kind != PaddingMode::Kind::kConstant &&
      pad.kind != PaddingMode::Kind::kPeriodic) {
    throw UnsupportedPadding("oracle: " + pad.name());
  }
  const int d = x.size();
  const int k = kernel.half_width();
  const auto read = [&](int p, int r, int c) -> double {
    if (pad.kind == PaddingMode::Kind::kPeriodic) {
      r = ((r % d) + d) % d;
      c = ((c % d) + d) % d;
      return x.at(p, r, c);
    }
    if (r < 0 || c < 0 || r >= d || c >= d) return pad.value;
    return x.at(p, r, c);
  };
  Tensor3 out(kernel.out_channels(), d);
  for (int q = 0; q < kernel.out_channels(); ++q) {
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) {
        double acc = 0.0;
        for (int p = 0; p < kernel.in_channels(); ++p) {
          for (int s = -k; s <= k; ++s) {
            for (int t = -k; t <= k; ++t) {
              acc += kernel.at(p, q, s, t) * read(p, m + s, n + t);
            }
          }
        }
        out.at(q, m, n) = acc;
      }
    }
  }
  return out;
}

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::at(std::uint64_t index) const {
  return mix(seed_ + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

Tensor3 random_tensor(CounterRng& rng, int channels, int d, double scale) {
  Tensor3 x(channels, d);
  for (double& v : x.data()) v = rng.uniform(-scale, scale);
  return x;
}

Kernel4 random_kernel(CounterRng& rng, int in, int out, int k, double scale) {
  Kernel4 kernel(in, out, k);
  for (double& v : kernel.data()) v = rng.uniform(-scale, scale);
  return kernel;
}

ShallowNet random_shallow(CounterRng& rng, int d, int hidden, double box) {
  ShallowNet net;
  net.d = d;
  net.hidden = hidden;
  net.box = box;
  net.W.resize(static_cast<std::size_t>(hidden) * d * d);
  for (double& v : net.W) v = rng.uniform(-1.0, 1.0);
  net.beta.resize(hidden);
  for (double& v : net.beta) v = rng.uniform(-1.0, 1.0);
  net.alpha.resize(hidden);
  for (double& v : net.alpha) v = rng.uniform(-1.0, 1.0);
  return net;
}

LinearityProbe linearity_probe(const DeepNet& net) {
  return [&net](const Tensor3& x) {
    ForwardTrace trace;
    forward(net, x, &trace);
    return trace.linear_site_min;
  };
}

std::vector<Tensor3> certification_inputs(const CertifyConfig& config) {
  std::vector<Tensor3> inputs;
  inputs.reserve(config.samples + 3);
  Tensor3 upper(1, config.d);
  for (double& v : upper.data()) v = config.box;
  inputs.push_back(upper);
  inputs.push_back(-upper);
  inputs.emplace_back(1, config.d);
  CounterRng rng(config.seed);
  for (int i = 0; i < config.samples; ++i) {
    inputs.push_back(random_tensor(rng, 1, config.d, config.box));
  }
  return inputs;
}

EquivalenceReport certify_equivalence(const Evaluator& f, const Evaluator& g,
                                      const CertifyConfig& config,
                                      const LinearityProbe& probe) {
  const std::vector<Tensor3> inputs = certification_inputs(config);
  const int count = static_cast<int>(inputs.size());
  std::vector<double> abs_err(count), rel_err(count);
  std::vector<std::vector<double>> sites(count);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    const double fv = f(inputs[i]);
    const double gv = g(inputs[i]);
    const double diff = std::abs(fv - gv);
    abs_err[i] = std::isnan(diff) ? INFINITY : diff;
    rel_err[i] = abs_err[i] / (1.0 + std::abs(gv));
    if (probe) sites[i] = probe(inputs[i]);
  }

  EquivalenceReport report;
  report.samples = count;
  report.pad_modes = config.pad_modes;
  report.seed = config.seed;
  report.tolerance = config.tolerance;
  for (int i = 0; i < count; ++i) {
    report.max_abs_err = std::max(report.max_abs_err, abs_err[i]);
    report.max_rel_err = std::max(report.max_rel_err, rel_err[i]);
    if (sites[i].size() > report.per_layer_violations.size()) {
      report.per_layer_violations.resize(sites[i].size(), 0);
    }
    for (std::size_t l = 0; l < sites[i].size(); ++l) {
      if (sites[i][l] < config.linearity_floor) {
        ++report.per_layer_violations[l];
        ++report.linearity_violations;
      }
    }
  }
  report.pass = report.max_rel_err <= config.tolerance &&
                report.linearity_violations == 0;
  return report;
}

AuditReport audit_plan(const LoweredPlan& plan) {
  std::vector<std::string> violations;
  AuditReport report;
  report.k = plan.k;
  const auto fail = [&](std::string what) { violations.push_back(std::move(what)); };

  if (plan.k < 1) fail("k must be >= 1");
  const int levels = std::max(plan.k - 1, 0);
  if (static_cast<int>(plan.stages.size()) != levels) {
    fail("expected " + std::to_string(levels) + " shift stages, found " +
         std::to_string(plan.stages.size()));
  }
  if (static_cast<int>(plan.index_sets.size()) != levels) {
    fail("expected " + std::to_string(levels) + " index sets, found " +
         std::to_string(plan.index_sets.size()));
  }
  if (!violations.empty()) throw AuditFailure(violations);

  std::map<std::vector<ShiftStep>, int> previous{{{}, 0}};
  for (int n = 1; n <= levels; ++n) {
    const auto& set = plan.index_sets[n - 1];
    const std::string tag = "I_" + std::to_string(n);
    if (static_cast<int>(set.size()) != expected_width(n)) {
      fail(tag + " has " + std::to_string(set.size()) + " sequences, expected " +
           std::to_string(expected_width(n)));
    }
    int corner = 0, boundary = 0, full = 0;
    std::map<std::vector<ShiftStep>, int> current;
    for (int q = 0; q < static_cast<int>(set.size()); ++q) {
      const auto& seq = set[q];
      if (static_cast<int>(seq.steps.size()) != n) {
        fail(tag + "[" + std::to_string(q) + "] has length " +
             std::to_string(seq.steps.size()));
        continue;
      }
      if (!is_surviving(seq.steps)) {
        fail(tag + "[" + std::to_string(q) + "] passes through a zero block");
      }
      const Pattern pattern = classify(seq.steps);
      if (pattern != seq.pattern) {
        fail(tag + "[" + std::to_string(q) + "] pattern tag disagrees with replay");
      }
      switch (pattern) {
        case Pattern::kCorner: ++corner; break;
        case Pattern::kBoundary: ++boundary; break;
        case Pattern::kFull: ++full; break;
      }
      if (q > 0 && !(set[q - 1].steps < seq.steps)) {
        fail(tag + " is not in strict lexicographic order at " + std::to_string(q));
      }
      std::vector<ShiftStep> parent(seq.steps.begin(), seq.steps.end() - 1);
      if (!previous.count(parent)) {
        fail(tag + "[" + std::to_string(q) + "] prefix is not in I_" +
             std::to_string(n - 1));
      }
      current.emplace(seq.steps, q);
    }
    report.pattern_census.push_back({corner, boundary, full});
    if (corner != 4 * n * n || boundary != 4 * n || full != 1) {
      fail(tag + " census (" + std::to_string(corner) + ", " +
           std::to_string(boundary) + ", " + std::to_string(full) +
           ") != (4n^2, 4n, 1)");
    }

    const Kernel4& stage = plan.stages[n - 1];
    report.stage_widths.push_back(stage.out_channels());
    const std::string st = "S^" + std::to_string(n);
    const int in_width = n == 1 ? 1 : expected_width(n - 1);
    if (stage.in_channels() != in_width || stage.out_channels() != expected_width(n) ||
        stage.half_width() != 1) {
      fail(st + " shape " + std::to_string(stage.in_channels()) + "x" +
           std::to_string(stage.out_channels()) + " != " + std::to_string(in_width) +
           "x" + std::to_string(expected_width(n)) + "x3x3");
    } else if (static_cast<int>(set.size()) == expected_width(n)) {
      for (int q = 0; q < stage.out_channels(); ++q) {
        const auto& steps = set[q].steps;
        if (static_cast<int>(steps.size()) != n) continue;
        std::vector<ShiftStep> parent(steps.begin(), steps.end() - 1);
        const auto it = previous.find(parent);
        const int owner = it == previous.end() ? -1 : it->second;
        int nonzero = 0;
        for (int p = 0; p < stage.in_channels(); ++p) {
          if (stage.slice_is_zero(p, q)) continue;
          ++nonzero;
          if (p != owner) {
            fail(st + " block [" + std::to_string(p) + "," + std::to_string(q) +
                 "] is nonzero but not the prefix channel");
          } else if (!(stage.slice(p, q) ==
                       shift_kernel(steps.back().i, steps.back().j))) {
            fail(st + " block [" + std::to_string(p) + "," + std::to_string(q) +
                 "] is not the shift kernel S_{" + std::to_string(steps.back().i) +
                 "," + std::to_string(steps.back().j) + "}");
          }
        }
        if (nonzero != 1) {
          fail(st + " output channel " + std::to_string(q) + " has " +
               std::to_string(nonzero) + " nonzero blocks, expected 1");
        }
      }
    }
    previous = std::move(current);
  }

  report.terminal_rows = plan.terminal.in_channels();
  const int terminal_rows = levels == 0 ? 1 : expected_width(levels);
  if (plan.terminal.in_channels() != terminal_rows) {
    fail("terminal has " + std::to_string(plan.terminal.in_channels()) +
         " input channels, expected " + std::to_string(terminal_rows));
  }
  if (levels > 0 && plan.terminal.half_width() != 1) {
    fail("terminal must be 3x3");
  }
  if (!violations.empty()) throw AuditFailure(violations);

  report.checks = {"stage count", "stage widths (2n+1)^2",
                   "one-hot shift blocks at prefix channels",
                   "pattern census (4n^2, 4n, 1)", "prefix closure",
                   "lexicographic order", "terminal rows (2k-1)^2"};
  return report;
}

namespace {

long long classic_formula(int d, int hidden) {
  const long long k = d / 2;
  const long long N = hidden;
  long long total = 0;
  for (long long l = 1; l <= k - 1; ++l) {
    const long long w = (2 * l + 1) * (2 * l + 1);
    total += 9 * w * (2 * l - 1) * (2 * l - 1) + w;
  }
  total += N * ((2 * k - 1) * (2 * k - 1) + 1);
  total += N * d * d;
  return total;
}

long long bound_for(int d, int hidden) {
  const long long dd = d;
  return 2 * (dd * dd * dd * dd * dd + static_cast<long long>(hidden) * dd * dd);
}

void finish(ParamCount& pc) {
  pc.n_f = static_cast<long long>(pc.hidden) * (static_cast<long long>(pc.d) * pc.d + 2);
  pc.bound = bound_for(pc.d, pc.hidden);
  pc.n_c = 0;
  for (const auto& layer : pc.layers) pc.n_c += layer.count;
  pc.within_bound = pc.n_c <= pc.bound;
}

}  // namespace

ParamCount count_params(const ShallowNet& net) {
  ParamCount pc;
  pc.d = net.d;
  pc.hidden = net.hidden;
  finish(pc);
  pc.n_c = pc.n_f;
  pc.within_bound = pc.n_c <= pc.bound;
  return pc;
}

ParamCount count_params(const DeepNet& net, int hidden) {
  ParamCount pc;
  pc.d = net.d;
  pc.hidden = hidden;
  const auto n = [](std::size_t v) { return static_cast<long long>(v); };
  if (net.arch == Architecture::kClassic) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const auto& layer = net.layers[l];
      pc.layers.push_back({"K^" + std::to_string(l + 1), n(layer.kernel.numel())});
      pc.layers.push_back({"b^" + std::to_string(l + 1), n(layer.bias.size())});
    }
    pc.n_c_formula = classic_formula(net.d, hidden);
  } else {
    for (std::size_t l = 0; l < net.blocks.size(); ++l) {
      const auto& b = net.blocks[l];
      const std::string s = std::to_string(l + 1);
      pc.layers.push_back({"A^" + s, n(b.inner.numel())});
      pc.layers.push_back({"a^" + s, n(b.inner_bias.size())});
      pc.layers.push_back({"B^" + s, n(b.outer.numel())});
      pc.layers.push_back({"b^" + s, n(b.outer_bias.size())});
      pc.layers.push_back({"R^" + s, n(b.skip.numel())});
      if (b.theta) pc.layers.push_back({"theta^" + s, n(b.theta->numel())});
    }
  }
  pc.layers.push_back({"a", n(net.readout.size())});
  finish(pc);
  return pc;
}

ParamCount count_classic_schedule(int d, int hidden) {
  if (d < 3) throw DomainTooSmall("classic schedule needs d >= 3");
  ParamCount pc;
  pc.d = d;
  pc.hidden = hidden;
  const long long k = d / 2;
  long long prev = 1;
  for (long long l = 1; l <= k; ++l) {
    const long long w = l < k ? (2 * l + 1) * (2 * l + 1) : hidden;
    const std::string s = std::to_string(l);
    pc.layers.push_back({"K^" + s, 9 * prev * w});
    pc.layers.push_back({"b^" + s, w});
    prev = w;
  }
  pc.layers.push_back({"a", static_cast<long long>(hidden) * d * d});
  pc.n_c_formula = classic_formula(d, hidden);
  finish(pc);
  return pc;
}

PaddingProbeReport negative_padding_probe(const Kernel4& kernel, int d,
                                          std::uint64_t seed, int samples) {
  if (kernel.half_width() < 2) {
    throw InvalidKernel("padding probe needs k >= 2 (a 3x3 kernel has nothing to lower)");
  }
  const LoweredPlan plan = lower_kernel(kernel, d, PaddingMode::periodic());
  const int k = kernel.half_width();

  PaddingProbeReport report;
  report.k = k;
  report.d = d;
  report.samples = samples;
  report.seed = seed;
  CounterRng rng(seed);
  for (int i = 0; i < samples; ++i) {
    const Tensor3 x = random_tensor(rng, 1, d);

    Tensor3 y = x;
    for (const auto& stage : plan.stages) y = reflect_conv(stage, y);
    const Tensor3 cascade = reflect_conv(plan.terminal, y);
    const Tensor3 direct = reflect_conv(kernel, x);
    for (int q = 0; q < direct.channels(); ++q) {
      for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
          const double err = std::abs(cascade.at(q, m, n) - direct.at(q, m, n));
          const bool interior = m >= k && m < d - k && n >= k && n < d - k;
          double& slot = interior ? report.reflection_interior_max_err
                                  : report.reflection_border_max_err;
          slot = std::max(slot, err);
          report.reflection_max_abs_err = std::max(report.reflection_max_abs_err, err);
        }
      }
    }

    const PaddingMode periodic = PaddingMode::periodic();
    const Tensor3 lowered = apply_plan(plan, x, periodic);
    report.periodic_max_abs_err = std::max(
        report.periodic_max_abs_err,
        max_abs_diff(lowered, oracle_conv(kernel, x, periodic)));
  }

  try {
    (void)conv2d(kernel, Tensor3(1, d), PaddingMode::reflection());
  } catch (const UnsupportedPadding&) {
    report.reflection_rejected = true;
  }
  report.negative_confirmed = report.reflection_border_max_err > 1e-6 &&
                              report.periodic_max_abs_err <= 1e-12 &&
                              report.reflection_rejected;
  return report;
}

}  // namespace convlower
