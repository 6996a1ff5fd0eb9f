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

// Batch front door: lower kernels, build equivalent networks, certify them.
//
// Every command is determined by an optional --spec JSON file plus flags;
// flags win over spec fields. Artifacts go to --out / --report, stdout gets
// one summary line. Exit codes: 0 pass, 1 fail, 2 audit failure, 64 usage
// or input error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "convlower/construct.h"
#include "convlower/errors.h"
#include "convlower/harness.h"
#include "convlower/json_io.h"
#include "convlower/kernel_decompose.h"
#include "convlower/ops.h"

namespace {

using convlower::io::Json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitAudit = 2;
constexpr int kExitUsage = 64;

struct JobSpec {
  std::string command;
  std::string arch;
  std::string kernel;
  std::string net;
  std::string reference;
  std::string pad = "periodic";
  double pad_value = 0.0;
  int d = 0;
  int hidden = 4;
  double box = 1.0;
  int k = 2;
  int outputs = 1;
  std::uint64_t seed = 0;
  int samples = 200;
  std::optional<double> tolerance;
  bool once = false;
  std::string out;
  std::string report;
};

// Copies spec-file fields into options the user did not pass on the
// command line.
class SpecMerger {
 public:
  SpecMerger(const Json& spec, const CLI::App& app) : spec_(spec), app_(app) {}

  template <typename T>
  void fill(const std::string& flag, const std::string& key, T& target) const {
    if (!spec_.contains(key)) return;
    if (const CLI::Option* opt = find(flag); opt != nullptr && opt->count() > 0) return;
    try {
      target = spec_[key].get<T>();
    } catch (const std::exception&) {
      throw convlower::ParseError("spec." + key + ": wrong type");
    }
  }

  void fill_tolerance(std::optional<double>& target) const {
    if (!spec_.contains("tolerance")) return;
    if (const CLI::Option* opt = find("--tolerance"); opt != nullptr && opt->count() > 0) return;
    if (!spec_["tolerance"].is_number()) throw convlower::ParseError("spec.tolerance: wrong type");
    target = spec_["tolerance"].get<double>();
  }

  void fill_pad(JobSpec& job) const {
    if (!spec_.contains("pad")) return;
    if (const CLI::Option* opt = find("--pad"); opt != nullptr && opt->count() > 0) return;
    const convlower::PaddingMode pad = convlower::io::pad_from_json(spec_["pad"], "spec.pad");
    job.pad = convlower::io::to_json(pad)["mode"].get<std::string>();
    job.pad_value = pad.value;
  }

 private:
  const CLI::Option* find(const std::string& flag) const {
    for (const CLI::App* sub : app_.get_subcommands()) {
      for (const CLI::Option* opt : sub->get_options()) {
        if (opt->check_lname(flag.substr(2))) return opt;
      }
    }
    for (const CLI::Option* opt : app_.get_options()) {
      if (opt->check_lname(flag.substr(2))) return opt;
    }
    return nullptr;
  }

  const Json& spec_;
  const CLI::App& app_;
};

convlower::PaddingMode padding_of(const JobSpec& job) {
  Json j = {{"mode", job.pad}};
  if (job.pad == "constant") j["value"] = job.pad_value;
  return convlower::io::pad_from_json(j, "--pad");
}

void emit(const std::string& path, const Json& j) {
  if (!path.empty()) convlower::io::write_file(path, j);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw convlower::ParseError(what);
}

convlower::Kernel4 load_kernel(const JobSpec& job) {
  if (!job.kernel.empty()) {
    return convlower::io::kernel_from_json(convlower::io::read_file(job.kernel), job.kernel);
  }
  require(job.k >= 0 && job.outputs >= 1, "--k must be >= 0 and --M >= 1");
  convlower::CounterRng rng(job.seed);
  return convlower::random_kernel(rng, 1, job.outputs, job.k);
}

convlower::ShallowNet load_shallow(const JobSpec& job) {
  if (!job.net.empty()) {
    return convlower::io::shallow_from_json(convlower::io::read_file(job.net), job.net);
  }
  require(job.d >= 1, "--d is required when no --net file is given");
  require(job.hidden >= 0, "--N must be >= 0");
  require(job.box > 0.0, "--box must be positive");
  convlower::CounterRng rng(job.seed);
  return convlower::random_shallow(rng, job.d, job.hidden, job.box);
}

std::string format_err(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

int run_lower(const JobSpec& job) {
  const convlower::Kernel4 kernel = load_kernel(job);
  const int d = job.d > 0 ? job.d : kernel.half_width() + 1;
  const convlower::PaddingMode pad = padding_of(job);
  const double tol = job.tolerance.value_or(1e-12);

  if (job.once) {
    const auto pairs = convlower::decompose_once(kernel, d, pad);
    Json artifact = {{"k", kernel.half_width()}, {"d", d}, {"pad", convlower::io::to_json(pad)},
                     {"pairs", Json::array()}};
    for (const auto& pair : pairs) {
      artifact["pairs"].push_back({{"shift", {pair.shift.i, pair.shift.j}},
                                   {"P", convlower::io::to_json(pair.outer)},
                                   {"S", convlower::io::to_json(pair.inner)}});
    }
    emit(job.out, artifact);
    std::printf("decompose: k=%d d=%d %s -> 9 pairs of (%dx%d, 3x3) kernels\n",
                kernel.half_width(), d, pad.name().c_str(), 2 * kernel.half_width() - 1,
                2 * kernel.half_width() - 1);
    return kExitPass;
  }

  const convlower::LoweredPlan plan = convlower::lower_kernel(kernel, d, pad);
  emit(job.out, convlower::io::to_json(plan));
  const convlower::AuditReport audit = convlower::audit_plan(plan);

  convlower::CounterRng rng(job.seed + 1);
  double err = 0.0;
  const int trials = std::max(job.samples, 1);
  for (int i = 0; i < trials; ++i) {
    const convlower::Tensor3 x = convlower::random_tensor(rng, 1, d);
    err = std::max(err, convlower::max_abs_diff(convlower::apply_plan(plan, x, pad),
                                                convlower::oracle_conv(kernel, x, pad)));
  }
  const bool pass = err <= tol;
  Json report = {{"audit", convlower::io::to_json(audit)},
                 {"cascade", {{"samples", trials}, {"seed", job.seed}, {"max_abs_err", err},
                              {"tolerance", tol}, {"verdict", pass ? "Pass" : "Fail"}}}};
  emit(job.report, report);

  std::string widths = "1";
  for (const auto& s : plan.stages) widths += "->" + std::to_string(s.out_channels());
  widths += "->" + std::to_string(plan.terminal.out_channels());
  std::printf("%s: k=%d d=%d %s stages %s, audit Pass, cascade err %s (%s)\n",
              job.command.c_str(), plan.k, d, pad.name().c_str(), widths.c_str(),
              format_err(err).c_str(), pass ? "Pass" : "Fail");
  return pass ? kExitPass : kExitFail;
}

convlower::DeepNet build(const std::string& arch, const convlower::ShallowNet& net,
                         const convlower::PaddingMode& pad) {
  switch (convlower::parse_architecture(arch)) {
    case convlower::Architecture::kClassic: return convlower::build_classic(net, pad);
    case convlower::Architecture::kResNet: return convlower::build_resnet(net, pad);
    case convlower::Architecture::kPreAct: return convlower::build_preact_resnet(net, pad);
    case convlower::Architecture::kMgNet: return convlower::build_mgnet(net, pad);
  }
  return {};
}

convlower::CertifyConfig certify_config(const JobSpec& job, int d, double box,
                                        const convlower::PaddingMode& pad) {
  convlower::CertifyConfig config;
  config.d = d;
  config.box = box;
  config.samples = job.samples;
  config.seed = job.seed;
  config.tolerance = job.tolerance.value_or(1e-8);
  config.pad_modes = {pad.name()};
  return config;
}

int run_build(const JobSpec& job) {
  require(!job.arch.empty(), "build needs an architecture: classic|resnet|preact|mgnet");
  require(job.samples >= 1, "--samples must be >= 1");
  const convlower::ShallowNet net = load_shallow(job);
  const convlower::PaddingMode pad = padding_of(job);
  const convlower::DeepNet deep = build(job.arch, net, pad);
  emit(job.out, convlower::io::to_json(deep));
  const auto report = convlower::certify_equivalence(
      [&](const convlower::Tensor3& x) { return convlower::forward(deep, x); },
      [&](const convlower::Tensor3& x) { return net.evaluate(x); },
      certify_config(job, net.d, net.box, pad), convlower::linearity_probe(deep));
  emit(job.report, convlower::io::to_json(report));
  std::printf("build %s: d=%d N=%d depth %d c_L=%d, %d samples, max_rel_err %s, %s\n",
              job.arch.c_str(), net.d, net.hidden, deep.depth(), deep.output_channels(),
              report.samples, format_err(report.max_rel_err).c_str(),
              report.pass ? "Pass" : "Fail");
  return report.pass ? kExitPass : kExitFail;
}

struct AnyNet {
  std::optional<convlower::ShallowNet> shallow;
  std::optional<convlower::DeepNet> deep;

  int d() const { return shallow ? shallow->d : deep->d; }
  double operator()(const convlower::Tensor3& x) const {
    return shallow ? shallow->evaluate(x) : convlower::forward(*deep, x);
  }
};

AnyNet load_any(const std::string& path) {
  const Json j = convlower::io::read_file(path);
  AnyNet net;
  if (j.is_object() && j.contains("arch")) {
    net.deep = convlower::io::deep_from_json(j, path);
  } else {
    net.shallow = convlower::io::shallow_from_json(j, path);
  }
  return net;
}

int run_verify(const JobSpec& job) {
  require(!job.net.empty() && !job.reference.empty(), "verify needs --net and --reference");
  require(job.samples >= 1, "--samples must be >= 1");
  const AnyNet f = load_any(job.net);
  const AnyNet g = load_any(job.reference);
  require(f.d() == g.d(), "--net has d=" + std::to_string(f.d()) + " but --reference has d=" +
                              std::to_string(g.d()));
  const double box = g.shallow ? g.shallow->box : f.shallow ? f.shallow->box : job.box;
  convlower::CertifyConfig config = certify_config(job, f.d(), box, padding_of(job));
  config.pad_modes.clear();
  for (const AnyNet* n : {&f, &g}) {
    if (n->deep) config.pad_modes.push_back(n->deep->pad.name());
  }
  convlower::LinearityProbe probe;
  if (f.deep) probe = convlower::linearity_probe(*f.deep);
  const auto report = convlower::certify_equivalence(f, g, config, probe);
  emit(job.report, convlower::io::to_json(report));
  emit(job.out, convlower::io::to_json(report));
  std::printf("verify: %d samples, max_abs_err %s, max_rel_err %s, %s\n", report.samples,
              format_err(report.max_abs_err).c_str(), format_err(report.max_rel_err).c_str(),
              report.pass ? "Pass" : "Fail");
  return report.pass ? kExitPass : kExitFail;
}

int run_count(const JobSpec& job) {
  convlower::ParamCount pc;
  if (!job.net.empty()) {
    const AnyNet net = load_any(job.net);
    if (net.shallow) {
      pc = convlower::count_params(*net.shallow);
    } else {
      const int hidden = net.deep->arch == convlower::Architecture::kPreAct ||
                                 net.deep->arch == convlower::Architecture::kMgNet
                             ? net.deep->output_channels() - 2
                             : net.deep->output_channels();
      pc = convlower::count_params(*net.deep, hidden);
    }
  } else {
    require(job.d >= 3, "count needs --d >= 3 or a --net file");
    require(job.hidden >= 0, "--N must be >= 0");
    pc = convlower::count_classic_schedule(job.d, job.hidden);
  }
  const Json j = convlower::io::to_json(pc);
  emit(job.out, j);
  emit(job.report, j);
  std::printf("count: d=%d N=%d N_F %lld N_C %lld bound %lld (%s)\n", pc.d, pc.hidden, pc.n_f,
              pc.n_c, pc.bound, pc.within_bound ? "within bound" : "over bound");
  return pc.within_bound ? kExitPass : kExitFail;
}

int run_probe(const JobSpec& job) {
  const convlower::Kernel4 kernel = load_kernel(job);
  const int d = job.d > 0 ? job.d : 6;
  const auto report = convlower::negative_padding_probe(kernel, d, job.seed,
                                                        std::max(job.samples, 1));
  const Json j = convlower::io::to_json(report);
  emit(job.out, j);
  emit(job.report, j);
  std::printf("probe-padding: k=%d d=%d reflection border err %s, periodic err %s, "
              "reflection rejected %s, %s\n",
              report.k, d, format_err(report.reflection_border_max_err).c_str(),
              format_err(report.periodic_max_abs_err).c_str(),
              report.reflection_rejected ? "yes" : "no",
              report.negative_confirmed ? "negative confirmed" : "NOT confirmed");
  return report.negative_confirmed ? kExitPass : kExitFail;
}

int dispatch(const JobSpec& job) {
  if (job.command == "decompose" || job.command == "lower") return run_lower(job);
  if (job.command == "build") return run_build(job);
  if (job.command == "verify") return run_verify(job);
  if (job.command == "count") return run_count(job);
  if (job.command == "probe-padding") return run_probe(job);
  throw convlower::ParseError("unknown command '" + job.command + "'");
}

void apply_thread_cap() {
  const char* env = std::getenv("CONV_LOWER_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 0) {
    throw convlower::ParseError("CONV_LOWER_THREADS must be a non-negative integer");
  }
  convlower::set_num_threads(static_cast<int>(n));
}

void add_common(CLI::App* sub, JobSpec& job) {
  sub->add_option("--pad", job.pad, "constant|periodic")->check(
      CLI::IsMember({"constant", "periodic", "reflect", "replicate"}));
  sub->add_option("--pad-value", job.pad_value, "Constant padding value");
  sub->add_option("--seed", job.seed, "Seed for every random draw");
  sub->add_option("--samples", job.samples, "Random samples");
  sub->add_option("--tolerance", job.tolerance, "Pass/fail tolerance");
  sub->add_option("--out", job.out, "Artifact JSON path");
  sub->add_option("--report", job.report, "Report JSON path");
  sub->add_option("--d", job.d, "Input size d");
}

}  // namespace

int main(int argc, char** argv) {
  JobSpec job;
  std::string spec_path;
  CLI::App app{"Lower large convolution kernels and build equivalent deep CNNs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--spec", spec_path, "JobSpec JSON; flags override its fields");

  auto* decompose = app.add_subcommand("decompose", "Split a kernel into a 3x3 cascade");
  auto* lower = app.add_subcommand("lower", "Lower a kernel and audit the plan");
  for (auto* sub : {decompose, lower}) {
    add_common(sub, job);
    sub->add_option("--kernel", job.kernel, "Kernel JSON (random when absent)");
    sub->add_option("--k", job.k, "Half-width of the random kernel");
    sub->add_option("--M", job.outputs, "Output channels of the random kernel");
  }
  decompose->add_flag("--once", job.once, "Emit only the one-level nine-pair split");

  auto* build = app.add_subcommand("build", "Build an equivalent network from a shallow net");
  add_common(build, job);
  build->add_option("arch", job.arch, "classic|resnet|preact|mgnet")
      ->check(CLI::IsMember({"classic", "resnet", "preact", "mgnet"}));
  build->add_option("--net", job.net, "Shallow net JSON (random when absent)");
  build->add_option("--N", job.hidden, "Hidden units of the random shallow net");
  build->add_option("--box", job.box, "Box half-width of the random shallow net");

  auto* verify = app.add_subcommand("verify", "Certify two networks against each other");
  add_common(verify, job);
  verify->add_option("--net", job.net, "Network under test (deep or shallow JSON)");
  verify->add_option("--reference", job.reference, "Reference network JSON");
  verify->add_option("--box", job.box, "Box half-width when neither net is shallow");

  auto* count = app.add_subcommand("count", "Parameter accounting");
  add_common(count, job);
  count->add_option("--N", job.hidden, "Hidden units");
  count->add_option("--net", job.net, "Count an existing network instead");

  auto* probe = app.add_subcommand("probe-padding", "Reflection-padding negative control");
  add_common(probe, job);
  probe->add_option("--kernel", job.kernel, "Kernel JSON (random when absent)");
  probe->add_option("--k", job.k, "Half-width of the random kernel");

  auto* run = app.add_subcommand("run", "Run the command named in --spec");
  run->add_option("--spec", spec_path, "JobSpec JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    apply_thread_cap();
    const CLI::App* chosen = app.get_subcommands().front();
    job.command = chosen->get_name();
    if (!spec_path.empty()) {
      const Json spec = convlower::io::read_file(spec_path);
      require(spec.is_object(), spec_path + ": expected an object");
      if (job.command == "run") {
        require(spec.contains("command") && spec["command"].is_string(),
                spec_path + ".command: missing");
        job.command = spec["command"].get<std::string>();
      }
      const SpecMerger merge(spec, app);
      if (job.arch.empty()) merge.fill("--arch", "arch", job.arch);
      merge.fill("--kernel", "kernel", job.kernel);
      merge.fill("--net", "net", job.net);
      merge.fill("--reference", "reference", job.reference);
      merge.fill_pad(job);
      merge.fill("--d", "d", job.d);
      merge.fill("--N", "N", job.hidden);
      merge.fill("--box", "box", job.box);
      merge.fill("--k", "k", job.k);
      merge.fill("--M", "M", job.outputs);
      merge.fill("--seed", "seed", job.seed);
      merge.fill("--samples", "samples", job.samples);
      merge.fill_tolerance(job.tolerance);
      merge.fill("--once", "once", job.once);
      merge.fill("--out", "out", job.out);
      merge.fill("--report", "report", job.report);
    }
    return dispatch(job);
  } catch (const convlower::AuditFailure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::printf("%s: audit failed (%zu violations)\n", job.command.c_str(),
                e.violations().size());
    return kExitAudit;
  } catch (const convlower::SoundnessFailure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitFail;
  } catch (const convlower::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
