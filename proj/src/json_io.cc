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

#include <cmath>
#include <fstream>
#include <sstream>

#include "convlower/errors.h"

namespace convlower::io {
namespace {

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "." + key + ": missing");
  return *it;
}

double as_double(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  return j.get<int>();
}

std::vector<double> as_doubles(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<int> as_shape(const Json& j, std::size_t rank, const std::string& path) {
  if (!j.is_array() || j.size() != rank) {
    throw ParseError(path + ": expected " + std::to_string(rank) + " dimensions");
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < rank; ++i) {
    const int v = as_int(j[i], path + "[" + std::to_string(i) + "]");
    if (v < 0) throw ParseError(path + "[" + std::to_string(i) + "]: negative");
    out.push_back(v);
  }
  return out;
}

Json doubles(std::span<const double> values) {
  Json arr = Json::array();
  for (double v : values) arr.push_back(v);
  return arr;
}

// Library errors raised while assembling a parsed object are reported at
// the path of that object.
template <typename F>
auto at_path(const std::string& path, F&& build) {
  try {
    return build();
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

Json to_json(const Tensor3& x) {
  Json j;
  j["shape"] = {x.channels(), x.size(), x.size()};
  j["data"] = doubles(x.data());
  return j;
}

Tensor3 tensor_from_json(const Json& j, const std::string& path) {
  const auto shape = as_shape(field(j, "shape", path), 3, path + ".shape");
  auto data = as_doubles(field(j, "data", path), path + ".data");
  if (data.size() != static_cast<std::size_t>(shape[0]) * shape[1] * shape[2]) {
    throw ParseError(path + ".data: " + std::to_string(data.size()) +
                     " values do not fill the shape");
  }
  return at_path(path, [&] {
    return Tensor3::from_shape(shape[0], shape[1], shape[2], std::move(data));
  });
}

Json to_json(const Kernel4& kernel) {
  Json j;
  j["shape"] = {kernel.in_channels(), kernel.out_channels(), kernel.spatial(),
                kernel.spatial()};
  j["data"] = doubles(kernel.data());
  return j;
}

Kernel4 kernel_from_json(const Json& j, const std::string& path) {
  const auto shape = as_shape(field(j, "shape", path), 4, path + ".shape");
  auto data = as_doubles(field(j, "data", path), path + ".data");
  if (data.size() != static_cast<std::size_t>(shape[0]) * shape[1] * shape[2] * shape[3]) {
    throw ParseError(path + ".data: " + std::to_string(data.size()) +
                     " values do not fill the shape");
  }
  return at_path(path, [&] {
    return Kernel4::from_shape(shape[0], shape[1], shape[2], shape[3], std::move(data));
  });
}

Json to_json(const PaddingMode& pad) {
  Json j;
  switch (pad.kind) {
    case PaddingMode::Kind::kConstant:
      j["mode"] = "constant";
      j["value"] = pad.value;
      break;
    case PaddingMode::Kind::kPeriodic: j["mode"] = "periodic"; break;
    case PaddingMode::Kind::kReflection: j["mode"] = "reflect"; break;
    case PaddingMode::Kind::kReplication: j["mode"] = "replicate"; break;
  }
  return j;
}

PaddingMode pad_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) return pad_from_json(Json{{"mode", j}}, path);
  const Json& mode = field(j, "mode", path);
  if (!mode.is_string()) throw ParseError(path + ".mode: expected a string");
  const std::string m = mode.get<std::string>();
  if (m == "constant") {
    const auto it = j.find("value");
    return PaddingMode::constant(
        it == j.end() ? 0.0 : as_double(*it, path + ".value"));
  }
  if (m == "periodic") return PaddingMode::periodic();
  if (m == "reflect" || m == "reflection") return PaddingMode::reflection();
  if (m == "replicate" || m == "replication") return PaddingMode::replication();
  throw ParseError(path + ".mode: unknown padding '" + m + "'");
}

Json to_json(const LoweredPlan& plan) {
  Json j;
  j["k"] = plan.k;
  j["stages"] = Json::array();
  for (const auto& s : plan.stages) j["stages"].push_back(to_json(s));
  j["terminal"] = to_json(plan.terminal);
  j["index_sets"] = Json::array();
  for (const auto& set : plan.index_sets) {
    Json js = Json::array();
    for (const auto& seq : set) {
      Json steps = Json::array();
      for (const auto& st : seq.steps) steps.push_back({st.i, st.j});
      js.push_back(std::move(steps));
    }
    j["index_sets"].push_back(std::move(js));
  }
  return j;
}

LoweredPlan plan_from_json(const Json& j, const std::string& path) {
  LoweredPlan plan;
  plan.k = as_int(field(j, "k", path), path + ".k");
  const Json& stages = field(j, "stages", path);
  if (!stages.is_array()) throw ParseError(path + ".stages: expected an array");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    plan.stages.push_back(
        kernel_from_json(stages[i], path + ".stages[" + std::to_string(i) + "]"));
  }
  plan.terminal = kernel_from_json(field(j, "terminal", path), path + ".terminal");
  const Json& sets = field(j, "index_sets", path);
  if (!sets.is_array()) throw ParseError(path + ".index_sets: expected an array");
  for (std::size_t n = 0; n < sets.size(); ++n) {
    const std::string sp = path + ".index_sets[" + std::to_string(n) + "]";
    if (!sets[n].is_array()) throw ParseError(sp + ": expected an array");
    std::vector<IndexSeq> set;
    for (std::size_t q = 0; q < sets[n].size(); ++q) {
      const std::string qp = sp + "[" + std::to_string(q) + "]";
      const Json& seq = sets[n][q];
      if (!seq.is_array()) throw ParseError(qp + ": expected an array");
      IndexSeq out;
      for (std::size_t s = 0; s < seq.size(); ++s) {
        const std::string stp = qp + "[" + std::to_string(s) + "]";
        if (!seq[s].is_array() || seq[s].size() != 2) {
          throw ParseError(stp + ": expected [i, j]");
        }
        const int i = as_int(seq[s][0], stp + "[0]");
        const int jj = as_int(seq[s][1], stp + "[1]");
        if (i < -1 || i > 1 || jj < -1 || jj > 1) {
          throw ParseError(stp + ": shift outside {-1, 0, 1}");
        }
        out.steps.push_back({i, jj});
      }
      out.pattern = classify(out.steps);
      set.push_back(std::move(out));
    }
    plan.index_sets.push_back(std::move(set));
  }
  return plan;
}

Json to_json(const ShallowNet& net) {
  Json j;
  j["d"] = net.d;
  Json rows = Json::array();
  const std::size_t cols = static_cast<std::size_t>(net.d) * net.d;
  for (int n = 0; n < net.hidden; ++n) {
    rows.push_back(doubles(std::span<const double>(net.W).subspan(n * cols, cols)));
  }
  j["W"] = std::move(rows);
  j["beta"] = doubles(net.beta);
  j["alpha"] = doubles(net.alpha);
  j["box"] = net.box;
  return j;
}

ShallowNet shallow_from_json(const Json& j, const std::string& path) {
  ShallowNet net;
  const Json& rows = field(j, "W", path);
  if (!rows.is_array()) throw ParseError(path + ".W: expected an array of rows");
  net.hidden = static_cast<int>(rows.size());
  std::size_t cols = 0;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    auto row = as_doubles(rows[n], path + ".W[" + std::to_string(n) + "]");
    if (n == 0) cols = row.size();
    if (row.size() != cols) {
      throw ParseError(path + ".W[" + std::to_string(n) + "]: row length " +
                       std::to_string(row.size()) + " != " + std::to_string(cols));
    }
    net.W.insert(net.W.end(), row.begin(), row.end());
  }
  if (j.contains("d")) {
    net.d = as_int(j["d"], path + ".d");
  } else {
    if (net.hidden == 0) throw ParseError(path + ".d: required when W is empty");
    net.d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cols))));
  }
  if (net.hidden > 0 && cols != static_cast<std::size_t>(net.d) * net.d) {
    throw ParseError(path + ".W: " + std::to_string(cols) +
                     " columns is not d^2 for d = " + std::to_string(net.d));
  }
  net.beta = as_doubles(field(j, "beta", path), path + ".beta");
  net.alpha = as_doubles(field(j, "alpha", path), path + ".alpha");
  if (j.contains("box")) net.box = as_double(j["box"], path + ".box");
  if (!(net.box > 0.0)) throw ParseError(path + ".box: must be positive");
  at_path(path, [&] {
    net.validate();
    return 0;
  });
  return net;
}

Json to_json(const DeepNet& net) {
  Json j;
  j["arch"] = architecture_name(net.arch);
  j["d"] = net.d;
  j["pad"] = to_json(net.pad);
  j["layers"] = Json::array();
  if (net.arch == Architecture::kClassic) {
    for (const auto& layer : net.layers) {
      Json l;
      l["kernel"] = to_json(layer.kernel);
      l["bias"] = doubles(layer.bias);
      j["layers"].push_back(std::move(l));
    }
  } else {
    for (const auto& b : net.blocks) {
      Json l;
      l["A"] = to_json(b.inner);
      l["a"] = doubles(b.inner_bias);
      l["B"] = to_json(b.outer);
      l["b"] = doubles(b.outer_bias);
      l["R"] = to_json(b.skip);
      if (b.theta) l["theta"] = to_json(*b.theta);
      j["layers"].push_back(std::move(l));
    }
  }
  j["readout"] = doubles(net.readout);
  return j;
}

DeepNet deep_from_json(const Json& j, const std::string& path) {
  DeepNet net;
  const Json& arch = field(j, "arch", path);
  if (!arch.is_string()) throw ParseError(path + ".arch: expected a string");
  net.arch = at_path(path + ".arch",
                     [&] { return parse_architecture(arch.get<std::string>()); });
  net.d = as_int(field(j, "d", path), path + ".d");
  net.pad = pad_from_json(field(j, "pad", path), path + ".pad");
  const Json& layers = field(j, "layers", path);
  if (!layers.is_array()) throw ParseError(path + ".layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lp = path + ".layers[" + std::to_string(i) + "]";
    const Json& l = layers[i];
    if (net.arch == Architecture::kClassic) {
      ConvLayer layer;
      layer.kernel = kernel_from_json(field(l, "kernel", lp), lp + ".kernel");
      layer.bias = as_doubles(field(l, "bias", lp), lp + ".bias");
      net.layers.push_back(std::move(layer));
    } else {
      ResidualBlock b;
      b.inner = kernel_from_json(field(l, "A", lp), lp + ".A");
      b.inner_bias = as_doubles(field(l, "a", lp), lp + ".a");
      b.outer = kernel_from_json(field(l, "B", lp), lp + ".B");
      b.outer_bias = as_doubles(field(l, "b", lp), lp + ".b");
      b.skip = kernel_from_json(field(l, "R", lp), lp + ".R");
      if (l.contains("theta")) b.theta = kernel_from_json(l["theta"], lp + ".theta");
      net.blocks.push_back(std::move(b));
    }
  }
  net.readout = as_doubles(field(j, "readout", path), path + ".readout");
  at_path(path, [&] {
    net.validate();
    return 0;
  });
  return net;
}

Json to_json(const EquivalenceReport& r) {
  Json j;
  j["samples"] = r.samples;
  j["max_abs_err"] = r.max_abs_err;
  j["max_rel_err"] = r.max_rel_err;
  j["pad_modes"] = r.pad_modes;
  j["seed"] = r.seed;
  j["tolerance"] = r.tolerance;
  j["verdict"] = r.pass ? "Pass" : "Fail";
  j["linearity_violations"] = r.linearity_violations;
  j["per_layer_violations"] = r.per_layer_violations;
  return j;
}

Json to_json(const AuditReport& r) {
  Json j;
  j["k"] = r.k;
  j["stage_widths"] = r.stage_widths;
  j["terminal_rows"] = r.terminal_rows;
  Json census = Json::array();
  for (const auto& c : r.pattern_census) {
    census.push_back({{"corner", c[0]}, {"boundary", c[1]}, {"full", c[2]}});
  }
  j["pattern_census"] = std::move(census);
  j["checks"] = r.checks;
  j["verdict"] = "Pass";
  return j;
}

Json to_json(const ParamCount& c) {
  Json j;
  j["d"] = c.d;
  j["N"] = c.hidden;
  j["N_F"] = c.n_f;
  j["N_C"] = c.n_c;
  j["N_C_formula"] = c.n_c_formula;
  j["bound"] = c.bound;
  j["within_bound"] = c.within_bound;
  Json layers = Json::array();
  for (const auto& l : c.layers) layers.push_back({{"name", l.name}, {"count", l.count}});
  j["layers"] = std::move(layers);
  return j;
}

Json to_json(const PaddingProbeReport& r) {
  Json j;
  j["k"] = r.k;
  j["d"] = r.d;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["reflection_max_abs_err"] = r.reflection_max_abs_err;
  j["reflection_border_max_err"] = r.reflection_border_max_err;
  j["reflection_interior_max_err"] = r.reflection_interior_max_err;
  j["periodic_max_abs_err"] = r.periodic_max_abs_err;
  j["reflection_rejected"] = r.reflection_rejected;
  j["negative_confirmed"] = r.negative_confirmed;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void write_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << dump(j);
}

}  // namespace convlower::io
