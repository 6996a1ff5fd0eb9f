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

#include "convlower/json_io.h"

#include <gtest/gtest.h>

#include "convlower/construct.h"
#include "convlower/errors.h"

namespace convlower {
namespace {

template <typename T, typename Parse>
void expect_round_trip(const T& value, Parse parse) {
  const std::string first = io::dump(io::to_json(value));
  const std::string second = io::dump(io::to_json(parse(io::parse(first))));
  EXPECT_EQ(first, second);
}

std::string error_of(const std::string& text,
                     const std::function<void(const io::Json&)>& parse) {
  try {
    parse(io::parse(text));
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

TEST(JsonIoTest, TensorAndKernelRoundTrip) {
  CounterRng rng(1);
  const Tensor3 x = random_tensor(rng, 2, 3);
  const Kernel4 k = random_kernel(rng, 2, 3, 1);
  expect_round_trip(x, [](const io::Json& j) { return io::tensor_from_json(j); });
  expect_round_trip(k, [](const io::Json& j) { return io::kernel_from_json(j); });
  EXPECT_EQ(io::tensor_from_json(io::to_json(x)), x);
  EXPECT_EQ(io::kernel_from_json(io::to_json(k)), k);
}

TEST(JsonIoTest, PaddingForms) {
  EXPECT_EQ(io::pad_from_json(io::parse(R"({"mode":"constant","value":0.7})")),
            PaddingMode::constant(0.7));
  EXPECT_EQ(io::pad_from_json(io::parse(R"("periodic")")), PaddingMode::periodic());
  EXPECT_EQ(io::pad_from_json(io::parse(R"({"mode":"reflect"})")), PaddingMode::reflection());
  EXPECT_THROW(io::pad_from_json(io::parse(R"({"mode":"mirror"})")), ParseError);
}

TEST(JsonIoTest, PlanRoundTripKeepsPatterns) {
  CounterRng rng(2);
  const LoweredPlan plan = lower_kernel(random_kernel(rng, 1, 2, 3), 8, PaddingMode::periodic());
  expect_round_trip(plan, [](const io::Json& j) { return io::plan_from_json(j); });
  const LoweredPlan back = io::plan_from_json(io::to_json(plan));
  EXPECT_EQ(back.index_sets, plan.index_sets);
  EXPECT_EQ(back.stages, plan.stages);
  EXPECT_EQ(back.terminal, plan.terminal);
}

TEST(JsonIoTest, NetworksRoundTrip) {
  CounterRng rng(3);
  const ShallowNet net = random_shallow(rng, 8, 3);
  expect_round_trip(net, [](const io::Json& j) { return io::shallow_from_json(j); });
  for (const DeepNet& deep : {build_classic(net, PaddingMode::constant(0.7)),
                              build_resnet(net, PaddingMode::periodic()),
                              build_mgnet(net, PaddingMode::periodic())}) {
    expect_round_trip(deep, [](const io::Json& j) { return io::deep_from_json(j); });
  }
}

TEST(JsonIoTest, ShallowNetInfersDFromColumns) {
  const ShallowNet net = io::shallow_from_json(
      io::parse(R"({"W":[[1,2,3,4]],"beta":[0],"alpha":[1],"box":1})"));
  EXPECT_EQ(net.d, 2);
  EXPECT_EQ(net.hidden, 1);
}

TEST(JsonIoTest, ErrorsNameTheField) {
  const auto shallow = [](const io::Json& j) { io::shallow_from_json(j); };
  EXPECT_NE(error_of(R"({"W":[[1,2,3]],"beta":[0],"alpha":[1]})", shallow).find("$.W"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"W":[[1,2,3,4],[1]],"beta":[0],"alpha":[1]})", shallow).find("$.W[1]"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"W":[[1,2,3,4]],"alpha":[1]})", shallow).find("$.beta"),
            std::string::npos);
  const auto kernel = [](const io::Json& j) { io::kernel_from_json(j, "net.K"); };
  EXPECT_NE(error_of(R"({"shape":[1,1,3,3],"data":[1,2]})", kernel).find("net.K.data"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"shape":[1,1,2,2],"data":[1,2,3,4]})", kernel).find("net.K"),
            std::string::npos);
  const auto deep = [](const io::Json& j) { io::deep_from_json(j); };
  EXPECT_NE(error_of(R"({"arch":"densenet","d":3,"pad":"periodic","layers":[],"readout":[]})",
                     deep)
                .find("$.arch"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"arch":"classic","d":3,"pad":"periodic","layers":[{"kernel":{"shape":[1,1,3,3],"data":[0,0,0,0,0,0,0,0,0]}}],"readout":[]})",
                     deep)
                .find("$.layers[0].bias"),
            std::string::npos);
  EXPECT_THROW(io::parse("{not json"), ParseError);
}

TEST(JsonIoTest, ReportsSerialize) {
  EquivalenceReport r;
  r.samples = 3;
  r.pass = true;
  r.pad_modes = {"periodic"};
  const auto j = io::to_json(r);
  EXPECT_EQ(j["verdict"], "Pass");
  EXPECT_EQ(j["pad_modes"][0], "periodic");
  EXPECT_EQ(io::to_json(count_classic_schedule(4, 3))["N_F"], 54);
}

}  // namespace
}  // namespace convlower
