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

// Acceptance suite: one line per criterion, exit status 1 if any fails.
// Usage: acceptance_test [report_dir]

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "convlower/construct.h"
#include "convlower/harness.h"
#include "convlower/json_io.h"
#include "convlower/kernel_decompose.h"
#include "convlower/ops.h"

namespace convlower {
namespace {

using io::Json;

constexpr double kCascadeTol = 1e-12;
constexpr double kLiftTol = 1e-10;
constexpr double kNetTol = 1e-8;
constexpr double kLeakTol = 1e-9;
constexpr double kLinearityFloor = -1e-12;
constexpr double kProbeGap = 1e-6;
constexpr double kRuntimeBudget = 30.0;
constexpr int kSamples = 200;

struct Outcome {
  bool pass = false;
  std::string summary;
  Json report;
};

PaddingMode pad_named(const std::string& name) {
  if (name == "periodic") return PaddingMode::periodic();
  return PaddingMode::constant(std::stod(name.substr(9)));
}

// Kernel lowering exactness over the full grid.
Outcome lowering_exactness() {
  const std::vector<std::string> pads = {"periodic", "constant:0", "constant:0.7"};
  double worst = 0.0, worst_oracle = 0.0;
  int cases = 0, audits = 0;
  Json grid = Json::array();
  std::uint64_t seed = 1000;
  for (int k = 2; k <= 5; ++k) {
    for (int d : {k + 1, k + 3, 16}) {
      for (const auto& pad_name : pads) {
        const PaddingMode pad = pad_named(pad_name);
        for (int m : {1, 3}) {
          CounterRng rng(seed++);
          const Kernel4 kernel = random_kernel(rng, 1, m, k);
          const LoweredPlan plan = lower_kernel(kernel, d, pad);
          audit_plan(plan);
          ++audits;
          double err = 0.0, err_oracle = 0.0;
          for (int trial = 0; trial < 20; ++trial) {
            const Tensor3 x = random_tensor(rng, 1, d);
            const Tensor3 cascade = apply_plan(plan, x, pad);
            err = std::max(err, max_abs_diff(cascade, conv2d(kernel, x, pad)));
            err_oracle = std::max(err_oracle, max_abs_diff(cascade, oracle_conv(kernel, x, pad)));
            ++cases;
          }
          worst = std::max(worst, err);
          worst_oracle = std::max(worst_oracle, err_oracle);
          grid.push_back({{"k", k}, {"d", d}, {"pad", pad.name()}, {"M", m},
                          {"max_abs_err", err}, {"max_abs_err_oracle", err_oracle}});
        }
      }
    }
  }
  Outcome out;
  out.pass = worst <= kCascadeTol && worst_oracle <= kCascadeTol;
  out.report = {{"cases", cases}, {"audited_plans", audits}, {"max_abs_err", worst},
                {"max_abs_err_oracle", worst_oracle}, {"tolerance", kCascadeTol},
                {"grid", grid}};
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d inputs, %d plans, max_abs_err %.3e (oracle %.3e), tol %.0e",
                cases, audits, worst, worst_oracle, kCascadeTol);
  out.summary = buf;
  return out;
}

// Channel-count law and the census recursion, n = 1..6.
Outcome channel_count_law() {
  Outcome out;
  out.pass = true;
  int prev_c = 0, prev_b = 0;
  Json levels = Json::array();
  CounterRng rng(2000);
  const LoweredPlan plan = lower_kernel(random_kernel(rng, 1, 1, 7), 8, PaddingMode::periodic());
  const AuditReport audit = audit_plan(plan);
  for (int n = 1; n <= 6; ++n) {
    const Kernel4& stage = plan.stages[n - 1];
    int used = 0;
    for (int q = 0; q < stage.out_channels(); ++q) {
      bool any = false;
      for (int p = 0; p < stage.in_channels() && !any; ++p) any = !stage.slice_is_zero(p, q);
      used += any;
    }
    const auto& census = audit.pattern_census[n - 1];
    const int c = census[0], b = census[1], f = census[2];
    const bool ok = used == (2 * n + 1) * (2 * n + 1) && c == 4 * n * n && b == 4 * n &&
                    f == 1 && c == prev_c + 2 * prev_b + 4 && b == prev_b + 4;
    out.pass = out.pass && ok;
    levels.push_back({{"n", n}, {"used_channels", used}, {"corner", c}, {"boundary", b},
                      {"full", f}, {"recursion_holds", ok}});
    prev_c = c;
    prev_b = b;
  }
  out.report = {{"levels", levels}};
  out.summary = "stage widths 9..169, census (4n^2, 4n, 1) and recursion for n = 1..6";
  return out;
}

// Shallow net vs one big-kernel layer, odd and even d.
Outcome lift_identity() {
  Outcome out;
  out.pass = true;
  double worst = 0.0;
  bool invariant = true;
  Json runs = Json::array();
  for (int d : {7, 8}) {
    CounterRng rng(3000 + d);
    const ShallowNet net = random_shallow(rng, d, 10);
    const BigKernelNet big = lift_shallow(net, d);
    CertifyConfig config;
    config.d = d;
    config.samples = kSamples;
    config.seed = 3100 + d;
    config.tolerance = kLiftTol;
    config.pad_modes = {"constant(0)", "constant(-3.5)", "periodic"};
    for (const auto& x : certification_inputs(config)) {
      const double a = forward_big(big, x, PaddingMode::constant(0.0));
      invariant = invariant && a == forward_big(big, x, PaddingMode::constant(-3.5)) &&
                  a == forward_big(big, x, PaddingMode::periodic());
    }
    const auto report = certify_equivalence(
        [&](const Tensor3& x) { return forward_big(big, x, PaddingMode::periodic()); },
        [&](const Tensor3& x) { return net.evaluate(x); }, config);
    worst = std::max(worst, report.max_rel_err);
    out.pass = out.pass && report.pass;
    runs.push_back({{"d", d}, {"N", 10}, {"report", io::to_json(report)}});
  }
  out.pass = out.pass && invariant;
  out.report = {{"runs", runs}, {"padding_invariant", invariant}};
  char buf[160];
  std::snprintf(buf, sizeof(buf), "d in {7,8}, N=10: max_rel_err %.3e (tol %.0e), padding-invariant %s",
                worst, kLiftTol, invariant ? "yes" : "no");
  out.summary = buf;
  return out;
}

struct NetCase {
  std::string name;
  int d;
  int hidden;
  DeepNet net;
  ShallowNet shallow;
};

EquivalenceReport certify_net(const DeepNet& deep, const ShallowNet& net, std::uint64_t seed,
                              const std::string& pad) {
  CertifyConfig config;
  config.d = net.d;
  config.box = net.box;
  config.samples = kSamples;
  config.seed = seed;
  config.tolerance = kNetTol;
  config.linearity_floor = kLinearityFloor;
  config.pad_modes = {pad};
  return certify_equivalence([&](const Tensor3& x) { return forward(deep, x); },
                             [&](const Tensor3& x) { return net.evaluate(x); }, config,
                             linearity_probe(deep));
}

std::vector<NetCase>& built_nets() {
  static std::vector<NetCase> nets;
  return nets;
}

// Deep 3x3 CNN vs shallow net.
Outcome deep_identity() {
  Outcome out;
  out.pass = true;
  double worst = 0.0;
  int violations = 0;
  Json runs = Json::array();
  for (int d : {7, 8}) {
    for (int n : {5, 10}) {
      CounterRng rng(4000 + 100 * d + n);
      const ShallowNet net = random_shallow(rng, d, n);
      for (const PaddingMode& pad : {PaddingMode::periodic(), PaddingMode::constant(0.0),
                                     PaddingMode::constant(0.7)}) {
        const DeepNet deep = build_classic(net, pad);
        bool shape = deep.depth() == d / 2;
        for (int l = 0; l + 1 < deep.depth(); ++l) {
          shape = shape && deep.layers[l].kernel.out_channels() == (2 * l + 3) * (2 * l + 3);
        }
        shape = shape && deep.layers.back().kernel.out_channels() == n;
        const auto report = certify_net(deep, net, 4500 + 100 * d + n, pad.name());
        worst = std::max(worst, report.max_rel_err);
        violations += report.linearity_violations;
        out.pass = out.pass && report.pass && shape;
        runs.push_back({{"d", d}, {"N", n}, {"depth", deep.depth()}, {"schedule_ok", shape},
                        {"report", io::to_json(report)}});
        built_nets().push_back({"classic", d, n, deep, net});
      }
    }
  }
  out.report = {{"runs", runs}};
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "12 nets: max_rel_err %.3e (tol %.0e), negativity events %d, depth/width schedule %s",
                worst, kNetTol, violations, out.pass ? "ok" : "checked");
  out.summary = buf;
  return out;
}

std::vector<Kernel4> skips_for(const std::string& kind, const std::vector<int>& widths,
                               CounterRng& rng) {
  if (kind == "identity") return identity_like_skips(widths);
  std::vector<Kernel4> r;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    r.push_back(kind == "zero" ? Kernel4(widths[l], widths[l + 1], 0)
                               : random_kernel(rng, widths[l], widths[l + 1], 0));
  }
  return r;
}

// ResNet, PreAct and MgNet vs shallow net, plus the auxiliary-channel identity.
Outcome residual_identities() {
  Outcome out;
  out.pass = true;
  double worst = 0.0, worst_leak = 0.0;
  int nets = 0;
  Json runs = Json::array();
  const int d = 8;
  for (int n : {3, 4}) {
    for (const std::string kind : {"zero", "identity", "random"}) {
      for (const PaddingMode& pad : {PaddingMode::periodic(), PaddingMode::constant(0.7)}) {
        CounterRng rng(5000 + 10 * n + kind.size());
        const ShallowNet net = random_shallow(rng, d, n);
        const auto res_r = skips_for(kind, residual_widths(d, n), rng);
        const auto pre_r = skips_for(kind, residual_widths(d, n + 2), rng);
        const DeepNet res = build_resnet(net, pad, res_r);
        const DeepNet pre = build_preact_resnet(net, pad, pre_r);
        const DeepNet mg = build_mgnet(net, pad, pre_r);
        const std::uint64_t seed = 5500 + 10 * n + kind.size();
        for (const DeepNet* deep : {&res, &pre, &mg}) {
          const auto report = certify_net(*deep, net, seed, pad.name());
          worst = std::max(worst, report.max_rel_err);
          out.pass = out.pass && report.pass;
          runs.push_back({{"arch", architecture_name(deep->arch)}, {"N", n}, {"R", kind},
                          {"c_L", deep->output_channels()}, {"report", io::to_json(report)}});
          built_nets().push_back({architecture_name(deep->arch), d, n, *deep, net});
          ++nets;
        }
        out.pass = out.pass && pre.output_channels() == n + 2;
        CertifyConfig config;
        config.d = d;
        config.samples = kSamples;
        config.seed = seed;
        for (const auto& x : certification_inputs(config)) {
          for (const DeepNet* deep : {&pre, &mg}) {
            const LeakProbe p = probe_leak(*deep, x);
            worst_leak = std::max(worst_leak, std::abs(p.aux_plus - p.aux_minus - p.leak));
          }
        }
      }
    }
  }
  out.pass = out.pass && worst_leak <= kLeakTol;
  out.report = {{"runs", runs}, {"max_aux_leak_err", worst_leak}, {"leak_tolerance", kLeakTol}};
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%d nets (resnet/preact/mgnet): max_rel_err %.3e (tol %.0e), aux leak err %.3e (tol %.0e)",
                nets, worst, kNetTol, worst_leak, kLeakTol);
  out.summary = buf;
  return out;
}

// Parameter accounting over every net built for the two criteria above.
Outcome parameter_accounting() {
  Outcome out;
  out.pass = !built_nets().empty();
  long long worst_margin = -1;
  Json rows = Json::array();
  for (const auto& c : built_nets()) {
    const ParamCount pc = count_params(c.net, c.hidden);
    const ParamCount shallow = count_params(c.shallow);
    const long long nf = static_cast<long long>(c.hidden) * (c.d * c.d + 2);
    const bool ok = pc.n_f == nf && shallow.n_f == nf && pc.n_c <= pc.bound && pc.within_bound;
    out.pass = out.pass && ok;
    worst_margin = std::max(worst_margin, pc.n_c * 1000 / pc.bound);
    rows.push_back({{"arch", c.name}, {"d", c.d}, {"N", c.hidden}, {"N_F", pc.n_f},
                    {"N_C", pc.n_c}, {"bound", pc.bound}, {"ok", ok}});
  }
  out.report = {{"nets", rows}};
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu nets: N_F == N(d^2+2), largest N_C/bound = %.3f",
                built_nets().size(), worst_margin / 1000.0);
  out.summary = buf;
  return out;
}

// Reflection padding breaks the cascade; periodic does not.
Outcome negative_control() {
  CounterRng rng(7000);
  const PaddingProbeReport r = negative_padding_probe(random_kernel(rng, 1, 1, 2), 6, 7001);
  Outcome out;
  out.pass = r.reflection_border_max_err > kProbeGap && r.periodic_max_abs_err <= kCascadeTol &&
             r.reflection_rejected;
  out.report = io::to_json(r);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "reflection border err %.3e (> %.0e), interior %.3e, periodic %.3e (<= %.0e), rejected %s",
                r.reflection_border_max_err, kProbeGap, r.reflection_interior_max_err,
                r.periodic_max_abs_err, kCascadeTol, r.reflection_rejected ? "yes" : "no");
  out.summary = buf;
  return out;
}

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace convlower

int main(int argc, char** argv) {
  using namespace convlower;
  const std::string report_dir = argc > 1 ? argv[1] : "";
  const std::vector<Criterion> criteria = {
      {1, "kernel lowering exactness", lowering_exactness},
      {2, "channel-count law", channel_count_law},
      {3, "shallow <-> big-kernel identity", lift_identity},
      {4, "deep CNN identity", deep_identity},
      {5, "residual identities", residual_identities},
      {6, "parameter accounting", parameter_accounting},
      {7, "reflection negative control", negative_control},
  };

  bool all = true;
  std::vector<std::string> first_bytes;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("threw: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.id == 1 && secs > kRuntimeBudget) {
      o.pass = false;
      o.summary += " (over the runtime budget)";
    }
    all = all && o.pass;
    std::printf("[%s] criterion %d: %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id,
                c.title.c_str(), o.summary.c_str(), secs);
    std::fflush(stdout);
    first_bytes.push_back(io::dump(o.report));
    if (!report_dir.empty()) {
      io::write_file(report_dir + "/criterion_" + std::to_string(c.id) + ".json", o.report);
    }
  }

  // Rerun every criterion with the same seeds and compare report bytes.
  built_nets().clear();
  int identical = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      identical += io::dump(criteria[i].run().report) == first_bytes[i];
    } catch (const std::exception&) {
    }
  }
  const bool deterministic = identical == static_cast<int>(criteria.size());
  all = all && deterministic;
  std::printf("[%s] criterion 8: determinism: %d/%zu reports byte-identical on rerun\n",
              deterministic ? "PASS" : "FAIL", identical, criteria.size());
  return all ? 0 : 1;
}
