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

#include "convlower/kernel_decompose.h"

#include <map>
#include <string>

#include "convlower/errors.h"
#include "convlower/ops.h"

namespace convlower {
namespace {

// Per-axis state of a shift sequence. A free axis has only seen 0 steps and
// still spans the whole kernel; a locked axis has stepped to one border and
// may only keep stepping the same way.
struct AxisState {
  int locked = 0;  // 0 = free, otherwise the border sign
  bool alive = true;

  void step(int v) {
    if (!alive) return;
    if (locked == 0) {
      locked = v;
    } else if (v != locked) {
      alive = false;
    }
  }
};

struct SeqState {
  AxisState row;
  AxisState col;
};

SeqState replay(const std::vector<ShiftStep>& steps) {
  SeqState st;
  for (const auto& s : steps) {
    st.row.step(s.i);
    st.col.step(s.j);
  }
  return st;
}

Pattern pattern_of(const SeqState& st) {
  const int free_axes = (st.row.locked == 0) + (st.col.locked == 0);
  if (free_axes == 2) return Pattern::kFull;
  if (free_axes == 1) return Pattern::kBoundary;
  return Pattern::kCorner;
}

// Class of kernel row/column index s in a (2k+1) frame: -1 top, 1 bottom,
// 0 interior.
int border_class(int s, int k) {
  if (s == -k) return -1;
  if (s == k) return 1;
  return 0;
}

void require_single_channel(const Kernel4& kernel, const char* what) {
  if (kernel.in_channels() != 1 || kernel.out_channels() != 1) {
    throw InvalidKernel(std::string(what) +
                        " expects a single-channel kernel, got " +
                        std::to_string(kernel.in_channels()) + "x" +
                        std::to_string(kernel.out_channels()));
  }
}

void require_lowerable(int k, int d, const PaddingMode& pad) {
  if (!pad.is_supported()) {
    throw UnsupportedPadding(pad.name() + " padding cannot be lowered");
  }
  if (d <= k) {
    throw InvalidDimension("input size d=" + std::to_string(d) +
                           " must exceed kernel half-width k=" +
                           std::to_string(k));
  }
}

void extend(std::vector<ShiftStep>& prefix, SeqState state, int remaining,
            std::vector<IndexSeq>& out) {
  if (remaining == 0) {
    out.push_back({prefix, pattern_of(state)});
    return;
  }
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      SeqState next = state;
      next.row.step(i);
      next.col.step(j);
      if (!next.row.alive || !next.col.alive) continue;
      prefix.push_back({i, j});
      extend(prefix, next, remaining - 1, out);
      prefix.pop_back();
    }
  }
}

}  // namespace

Kernel4 shift_kernel(int i, int j) {
  if (i < -1 || i > 1 || j < -1 || j > 1) {
    throw InvalidKernel("shift offsets must lie in {-1,0,1}");
  }
  Kernel4 s(1, 1, 1);
  s.at(0, 0, i, j) = 1.0;
  return s;
}

std::array<Kernel4, 9> split_k_tilde(const Kernel4& kernel) {
  require_single_channel(kernel, "split_k_tilde");
  const int k = kernel.half_width();
  if (k < 2) {
    throw InvalidKernel("split needs k >= 2 (5x5 or larger), got k=" +
                        std::to_string(k));
  }
  std::array<Kernel4, 9> blocks;
  for (auto& b : blocks) b = Kernel4(1, 1, k - 1);
  for (int s = -k; s <= k; ++s) {
    const int i = border_class(s, k);
    for (int t = -k; t <= k; ++t) {
      const int j = border_class(t, k);
      blocks[block_slot(i, j)].at(0, 0, s - i, t - j) = kernel.at(0, 0, s, t);
    }
  }
  return blocks;
}

Kernel4 embed_block(const Kernel4& block, int i, int j) {
  require_single_channel(block, "embed_block");
  const int k = block.half_width() + 1;
  Kernel4 out(1, 1, k);
  for (int s = -(k - 1); s <= k - 1; ++s) {
    for (int t = -(k - 1); t <= k - 1; ++t) {
      out.at(0, 0, s + i, t + j) = block.at(0, 0, s, t);
    }
  }
  return out;
}

std::vector<DecomposedPair> decompose_once(const Kernel4& kernel, int d,
                                           const PaddingMode& pad) {
  require_single_channel(kernel, "decompose_once");
  require_lowerable(kernel.half_width(), d, pad);
  auto blocks = split_k_tilde(kernel);
  std::vector<DecomposedPair> pairs;
  pairs.reserve(9);
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      pairs.push_back({{i, j},
                       std::move(blocks[block_slot(i, j)]),
                       shift_kernel(i, j)});
    }
  }
  return pairs;
}

Pattern classify(const std::vector<ShiftStep>& steps) {
  return pattern_of(replay(steps));
}

bool is_surviving(const std::vector<ShiftStep>& steps) {
  const SeqState st = replay(steps);
  return st.row.alive && st.col.alive;
}

std::vector<IndexSeq> build_index_set(int n) {
  if (n < 1) {
    throw InvalidDimension("index set length must be >= 1, got " +
                           std::to_string(n));
  }
  std::vector<IndexSeq> out;
  out.reserve(static_cast<std::size_t>(2 * n + 1) * (2 * n + 1));
  std::vector<ShiftStep> prefix;
  extend(prefix, SeqState{}, n, out);
  return out;
}

std::vector<Kernel4> build_shift_stages(
    const std::vector<std::vector<IndexSeq>>& index_sets) {
  std::vector<Kernel4> stages;
  std::map<std::vector<ShiftStep>, int> previous{{{}, 0}};
  int prev_width = 1;
  for (const auto& set : index_sets) {
    Kernel4 stage(prev_width, static_cast<int>(set.size()), 1);
    std::map<std::vector<ShiftStep>, int> current;
    for (int q = 0; q < static_cast<int>(set.size()); ++q) {
      const auto& steps = set[q].steps;
      std::vector<ShiftStep> parent(steps.begin(), steps.end() - 1);
      const auto it = previous.find(parent);
      if (it == previous.end()) {
        throw InvalidKernel("index set is not prefix-closed");
      }
      const ShiftStep last = steps.back();
      stage.at(it->second, q, last.i, last.j) = 1.0;
      current.emplace(steps, q);
    }
    stages.push_back(std::move(stage));
    previous = std::move(current);
    prev_width = static_cast<int>(set.size());
  }
  return stages;
}

Kernel4 build_terminal(const Kernel4& kernel,
                       const std::vector<IndexSeq>& final_set) {
  const int outputs = kernel.out_channels();
  Kernel4 terminal(static_cast<int>(final_set.size()), outputs, 1);
  for (int m = 0; m < outputs; ++m) {
    const Kernel4 channel = kernel.slice(0, m);
    for (int p = 0; p < static_cast<int>(final_set.size()); ++p) {
      Kernel4 current = channel;
      for (const auto& step : final_set[p].steps) {
        current = std::move(split_k_tilde(current)[block_slot(step.i, step.j)]);
      }
      terminal.set_slice(p, m, current);
    }
  }
  return terminal;
}

LoweredPlan lower_kernel(const Kernel4& kernel, int d,
                         const PaddingMode& pad) {
  if (kernel.in_channels() != 1) {
    throw InvalidKernel("lowering expects one input channel, got " +
                        std::to_string(kernel.in_channels()) +
                        "; lower each input channel separately");
  }
  const int k = kernel.half_width();
  if (k < 1) throw InvalidKernel("lowering needs k >= 1");
  require_lowerable(k, d, pad);

  LoweredPlan plan;
  plan.k = k;
  if (k == 1) {
    plan.terminal = kernel;
    return plan;
  }
  for (int n = 1; n <= k - 1; ++n) {
    plan.index_sets.push_back(build_index_set(n));
  }
  plan.stages = build_shift_stages(plan.index_sets);
  plan.terminal = build_terminal(kernel, plan.index_sets.back());
  return plan;
}

Tensor3 apply_plan(const LoweredPlan& plan, const Tensor3& x,
                   const PaddingMode& pad) {
  Tensor3 y = x;
  for (const auto& stage : plan.stages) y = conv2d(stage, y, pad);
  return conv2d(plan.terminal, y, pad);
}

}  // namespace convlower
