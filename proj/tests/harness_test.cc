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

#include <gtest/gtest.h>

#include "convlower/construct.h"
#include "convlower/errors.h"
#include "convlower/json_io.h"
#include "convlower/ops.h"

namespace convlower {
namespace {

// Reference values of the SplitMix64 stream seeded with 0, as produced by
// the canonical next() of Vigna's splitmix64.c.
TEST(CounterRngTest, MatchesSplitMix64) {
  CounterRng rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
  EXPECT_EQ(CounterRng(0).at(2), 0x06C45D188009454FULL);
}

TEST(CounterRngTest, UniformStaysInRange) {
  CounterRng rng(42);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-2.0, 3.0);
    ASSERT_GE(u, -2.0);
    ASSERT_LT(u, 3.0);
  }
}

TEST(OracleConvTest, IntegerDataMatchesConv2dExactly) {
  CounterRng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int cin = 1 + trial % 2, k = trial % 3, d = 2 + trial % 6;
    Kernel4 kernel(cin, 2, k);
    for (double& v : kernel.data()) v = static_cast<double>(rng.next() % 7) - 3.0;
    Tensor3 x(cin, d);
    for (double& v : x.data()) v = static_cast<double>(rng.next() % 11) - 5.0;
    const PaddingMode pad = trial % 2 ? PaddingMode::periodic() : PaddingMode::constant(2.0);
    ASSERT_EQ(oracle_conv(kernel, x, pad), conv2d(kernel, x, pad));
  }
}

TEST(OracleConvTest, RandomAgreement) {
  CounterRng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int cin = 1 + trial % 3, cout = 1 + trial % 2, k = trial % 3, d = 3 + trial % 5;
    const Kernel4 kernel = random_kernel(rng, cin, cout, k);
    const Tensor3 x = random_tensor(rng, cin, d);
    const PaddingMode pad = trial % 2 ? PaddingMode::periodic() : PaddingMode::constant(0.7);
    ASSERT_LE(max_abs_diff(oracle_conv(kernel, x, pad), conv2d(kernel, x, pad)), 1e-13);
  }
}

TEST(OracleConvTest, DeltaAndErrors) {
  Kernel4 delta(1, 1, 1);
  delta.at(0, 0, 0, 0) = 1.0;
  CounterRng rng(3);
  const Tensor3 x = random_tensor(rng, 1, 5);
  EXPECT_EQ(oracle_conv(delta, x, PaddingMode::constant(9.0)), x);
  EXPECT_THROW(oracle_conv(delta, Tensor3(2, 5), PaddingMode::periodic()), ChannelMismatch);
  EXPECT_THROW(oracle_conv(delta, x, PaddingMode::reflection()), UnsupportedPadding);
}

TEST(CertifyTest, IdenticalEvaluatorsPass) {
  CertifyConfig config;
  config.d = 4;
  config.samples = 10;
  const Evaluator f = [](const Tensor3& x) { return max_abs(x); };
  const auto report = certify_equivalence(f, f, config);
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.max_abs_err, 0.0);
  EXPECT_EQ(report.samples, 13);
}

TEST(CertifyTest, OffsetEvaluatorFails) {
  CertifyConfig config;
  config.d = 4;
  config.samples = 10;
  const Evaluator f = [](const Tensor3& x) { return vectorize(x)[0]; };
  const Evaluator g = [&](const Tensor3& x) { return f(x) + 1e-3; };
  const auto report = certify_equivalence(f, g, config);
  EXPECT_FALSE(report.pass);
  EXPECT_NEAR(report.max_abs_err, 1e-3, 1e-12);
}

TEST(CertifyTest, NanIsAFailure) {
  CertifyConfig config;
  config.d = 3;
  config.samples = 1;
  const auto report = certify_equivalence([](const Tensor3&) { return std::nan(""); },
                                          [](const Tensor3&) { return 0.0; }, config);
  EXPECT_FALSE(report.pass);
}

TEST(CertifyTest, SampleSetStartsWithCornersAndZero) {
  CertifyConfig config;
  config.d = 3;
  config.box = 2.5;
  config.samples = 4;
  const auto inputs = certification_inputs(config);
  ASSERT_EQ(inputs.size(), 7u);
  for (double v : inputs[0].data()) EXPECT_EQ(v, 2.5);
  for (double v : inputs[1].data()) EXPECT_EQ(v, -2.5);
  for (double v : inputs[2].data()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 3; i < inputs.size(); ++i) {
    for (double v : inputs[i].data()) EXPECT_LE(std::abs(v), 2.5);
  }
}

TEST(CertifyTest, LinearityViolationsFailTheVerdict) {
  CertifyConfig config;
  config.d = 3;
  config.samples = 5;
  const Evaluator f = [](const Tensor3&) { return 1.0; };
  const LinearityProbe probe = [](const Tensor3& x) {
    return std::vector<double>{0.0, x.data()[0]};
  };
  const auto report = certify_equivalence(f, f, config, probe);
  EXPECT_FALSE(report.pass);
  EXPECT_EQ(report.per_layer_violations.size(), 2u);
  EXPECT_EQ(report.per_layer_violations[0], 0);
  EXPECT_GT(report.per_layer_violations[1], 0);
}

TEST(CertifyTest, SameSeedSameReport) {
  CounterRng rng(4);
  const ShallowNet net = random_shallow(rng, 5, 3);
  const DeepNet deep = build_classic(net, PaddingMode::periodic());
  CertifyConfig config;
  config.d = 5;
  config.samples = 40;
  config.seed = 77;
  const auto run = [&] {
    return io::dump(io::to_json(certify_equivalence(
        [&](const Tensor3& x) { return forward(deep, x); },
        [&](const Tensor3& x) { return net.evaluate(x); }, config, linearity_probe(deep))));
  };
  const std::string first = run();
  set_num_threads(3);
  const std::string second = run();
  set_num_threads(0);
  EXPECT_EQ(first, second);
}

TEST(AuditTest, PlansFromLowerKernelPass) {
  CounterRng rng(5);
  for (int k = 2; k <= 5; ++k) {
    const LoweredPlan plan = lower_kernel(random_kernel(rng, 1, 2, k), k + 1,
                                          PaddingMode::periodic());
    const AuditReport report = audit_plan(plan);
    EXPECT_EQ(report.k, k);
    ASSERT_EQ(report.pattern_census.size(), static_cast<std::size_t>(k - 1));
    for (int n = 1; n < k; ++n) {
      EXPECT_EQ(report.pattern_census[n - 1], (std::vector<int>{4 * n * n, 4 * n, 1}));
    }
  }
}

TEST(AuditTest, KFourWidths) {
  CounterRng rng(6);
  const AuditReport report =
      audit_plan(lower_kernel(random_kernel(rng, 1, 1, 4), 9, PaddingMode::constant(0.0)));
  EXPECT_EQ(report.stage_widths, (std::vector<int>{9, 25, 49}));
  EXPECT_EQ(report.terminal_rows, 49);
}

TEST(AuditTest, CorruptedPlansAreRejected) {
  CounterRng rng(7);
  const LoweredPlan good = lower_kernel(random_kernel(rng, 1, 1, 3), 7, PaddingMode::periodic());

  LoweredPlan extra = good;
  extra.stages[1].at(3, 0, 1, 1) = 0.5;
  EXPECT_THROW(audit_plan(extra), AuditFailure);

  LoweredPlan wrong_shift = good;
  const int q = 10;
  for (int p = 0; p < 9; ++p) {
    if (!wrong_shift.stages[1].slice_is_zero(p, q)) {
      const Kernel4 s = wrong_shift.stages[1].slice(p, q);
      Kernel4 moved(1, 1, 1);
      moved.at(0, 0, 0, 0) = s.at(0, 0, 0, 0) == 1.0 ? 0.0 : 1.0;
      if (moved.at(0, 0, 0, 0) == 0.0) moved.at(0, 0, 1, 1) = 1.0;
      wrong_shift.stages[1].set_slice(p, q, moved);
    }
  }
  EXPECT_THROW(audit_plan(wrong_shift), AuditFailure);

  LoweredPlan reordered = good;
  std::swap(reordered.index_sets[1][0], reordered.index_sets[1][1]);
  EXPECT_THROW(audit_plan(reordered), AuditFailure);

  LoweredPlan missing = good;
  missing.stages.pop_back();
  try {
    audit_plan(missing);
    FAIL() << "expected AuditFailure";
  } catch (const AuditFailure& e) {
    EXPECT_FALSE(e.violations().empty());
  }
}

TEST(ParamCountTest, FrozenSmallCase) {
  const ParamCount pc = count_classic_schedule(4, 3);
  EXPECT_EQ(pc.n_f, 54);
  EXPECT_EQ(pc.bound, 2144);
  EXPECT_EQ(pc.n_c, 384);
  EXPECT_TRUE(pc.within_bound);
}

TEST(ParamCountTest, ConstructedNetMatchesSchedule) {
  CounterRng rng(8);
  for (int d : {7, 8}) {
    for (int n : {5, 10}) {
      const ShallowNet net = random_shallow(rng, d, n);
      const ParamCount built = count_params(build_classic(net, PaddingMode::periodic()), n);
      const ParamCount plan = count_classic_schedule(d, n);
      EXPECT_EQ(built.n_c, plan.n_c);
      EXPECT_EQ(built.n_c_formula, plan.n_c_formula);
      EXPECT_EQ(built.n_f, static_cast<long long>(n) * (d * d + 2));
      EXPECT_TRUE(built.within_bound);
    }
  }
  // Independent evaluation of the layer sum.
  EXPECT_EQ(count_classic_schedule(7, 5).n_c, 3515);
  EXPECT_EQ(count_classic_schedule(8, 10).n_c, 18274);
}

TEST(ParamCountTest, ShallowAndDegenerate) {
  ShallowNet net;
  net.d = 4;
  net.hidden = 0;
  EXPECT_EQ(count_params(net).n_f, 0);
  net.hidden = 3;
  EXPECT_EQ(count_params(net).n_f, 54);
}

TEST(ParamCountTest, ResidualCountsIncludeSkips) {
  CounterRng rng(9);
  const ShallowNet net = random_shallow(rng, 8, 3);
  const ParamCount res = count_params(build_resnet(net, PaddingMode::periodic()), 3);
  const ParamCount mg = count_params(build_mgnet(net, PaddingMode::periodic()), 3);
  // Block 1: A 1x18x9 + 18, B 18x25x9 + 25, R 1x25. Block 2: A 25x98x9 + 98,
  // B 98x3x9 + 3, R 25x3. Readout 3*64.
  EXPECT_EQ(res.n_c, 162 + 18 + 4050 + 25 + 25 + 22050 + 98 + 2646 + 3 + 75 + 192);
  EXPECT_GT(mg.n_c, res.n_c);
  EXPECT_TRUE(res.within_bound);
  EXPECT_TRUE(mg.within_bound);
}

TEST(PaddingProbeTest, ReflectionBreaksPeriodicHolds) {
  CounterRng rng(10);
  const PaddingProbeReport report = negative_padding_probe(random_kernel(rng, 1, 1, 2), 6, 10);
  EXPECT_GT(report.reflection_border_max_err, 1e-6);
  EXPECT_LE(report.reflection_interior_max_err, 1e-12);
  EXPECT_LE(report.periodic_max_abs_err, 1e-12);
  EXPECT_TRUE(report.reflection_rejected);
  EXPECT_TRUE(report.negative_confirmed);
  EXPECT_THROW(negative_padding_probe(Kernel4(1, 1, 1), 6), InvalidKernel);
}

}  // namespace
}  // namespace convlower
