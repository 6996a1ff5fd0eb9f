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

#ifndef CONVLOWER_JSON_IO_H_
#define CONVLOWER_JSON_IO_H_

#include <string>

#include "json.hpp"

#include "convlower/harness.h"
#include "convlower/kernel_decompose.h"
#include "convlower/network.h"
#include "convlower/tensor.h"

namespace convlower::io {

// Insertion-ordered so that serialize -> parse -> serialize is byte-stable.
using Json = nlohmann::ordered_json;

// Readers throw ParseError naming the offending path, e.g. "layers[2].bias".
Json to_json(const Tensor3& x);
Tensor3 tensor_from_json(const Json& j, const std::string& path = "$");

Json to_json(const Kernel4& kernel);
Kernel4 kernel_from_json(const Json& j, const std::string& path = "$");

// {"mode": "constant", "value": a} | {"mode": "periodic"} | {"mode": "reflect"}
// | {"mode": "replicate"}. Unsupported modes parse; conv2d rejects them.
Json to_json(const PaddingMode& pad);
PaddingMode pad_from_json(const Json& j, const std::string& path = "$");

Json to_json(const LoweredPlan& plan);
LoweredPlan plan_from_json(const Json& j, const std::string& path = "$");

Json to_json(const ShallowNet& net);
ShallowNet shallow_from_json(const Json& j, const std::string& path = "$");

Json to_json(const DeepNet& net);
DeepNet deep_from_json(const Json& j, const std::string& path = "$");

Json to_json(const EquivalenceReport& report);
Json to_json(const AuditReport& report);
Json to_json(const ParamCount& count);
Json to_json(const PaddingProbeReport& report);

// Two-space indented text with a trailing newline.
std::string dump(const Json& j);
Json parse(const std::string& text, const std::string& source = "$");
Json read_file(const std::string& path);
void write_file(const std::string& path, const Json& j);

}  // namespace convlower::io

#endif  // CONVLOWER_JSON_IO_H_
