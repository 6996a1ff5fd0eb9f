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

#ifndef CONVLOWER_KERNEL_DECOMPOSE_H_
#define CONVLOWER_KERNEL_DECOMPOSE_H_

#include <array>
#include <vector>

#include "convlower/tensor.h"

namespace convlower {

// One step (i, j) of a shift sequence, i, j in {-1, 0, 1}.
struct ShiftStep {
  int i = 0;
  int j = 0;

  auto operator<=>(const ShiftStep&) const = default;
};

// Zero pattern of the sub-kernel reached by following a shift sequence.
// Corner: single entry, Boundary: one edge, Full: dense.
enum class Pattern { kCorner, kBoundary, kFull };

struct IndexSeq {
  std::vector<ShiftStep> steps;
  Pattern pattern = Pattern::kFull;

  bool operator==(const IndexSeq&) const = default;
};

// 3x3 single-channel kernel with a single 1 at (i, j).
Kernel4 shift_kernel(int i, int j);

// Slot of (i, j) in the nine-element arrays below: (i+1)*3 + (j+1).
constexpr int block_slot(int i, int j) { return (i + 1) * 3 + (j + 1); }

// Splits a single-channel (2k+1)^2 kernel, k >= 2, into the nine
// (2k-1)^2 blocks P_{i,j}: corners hold one entry, edges hold one border
// row/column, (0,0) holds the interior. Throws InvalidKernel otherwise.
std::array<Kernel4, 9> split_k_tilde(const Kernel4& kernel);

// Re-embeds P_{i,j} into the (2k+1)^2 frame it was cut from; summing the
// nine embeddings reproduces the original kernel.
Kernel4 embed_block(const Kernel4& block, int i, int j);

struct DecomposedPair {
  ShiftStep shift;
  Kernel4 outer;  // P_{i,j}, (2k-1)^2
  Kernel4 inner;  // S_{i,j}, 3x3
};

// One level of the decomposition: K * X == sum_{i,j} P_{i,j} * (S_{i,j} * X)
// for constant and periodic padding. Returns all nine pairs in block_slot
// order. Throws InvalidDimension if d <= k.
std::vector<DecomposedPair> decompose_once(const Kernel4& kernel, int d,
                                           const PaddingMode& pad);

// The surviving shift sequences of length n, in lexicographic order of
// their steps. Size (2n+1)^2: 4n^2 Corner, 4n Boundary, one Full.
std::vector<IndexSeq> build_index_set(int n);

// Pattern after following `steps` from a full kernel. Sequences that pass
// through an all-zero block are not part of any index set; see
// is_surviving().
Pattern classify(const std::vector<ShiftStep>& steps);
bool is_surviving(const std::vector<ShiftStep>& steps);

// Cascade P * S^{k-1} * ... * S^1 equivalent to one (2k+1)^2 kernel with a
// single input channel. stages[n-1] maps (2n-1)^2 -> (2n+1)^2 channels;
// terminal maps (2k-1)^2 -> M. index_sets[n-1] lists I_n in channel order.
struct LoweredPlan {
  int k = 1;
  std::vector<Kernel4> stages;
  Kernel4 terminal;
  std::vector<std::vector<IndexSeq>> index_sets;
};

// Lowers a 1 x M x (2k+1)^2 kernel. For k == 1 the plan has no stages and
// the terminal is the kernel itself.
// Throws InvalidKernel if in_channels != 1 or k == 0, InvalidDimension if
// d <= k, UnsupportedPadding for reflection/replication.
LoweredPlan lower_kernel(const Kernel4& kernel, int d, const PaddingMode& pad);

// Builds only the shift stages S^1..S^n; they do not depend on any kernel.
std::vector<Kernel4> build_shift_stages(
    const std::vector<std::vector<IndexSeq>>& index_sets);

// Terminal kernel for the given final index set, one output channel per
// channel of `kernel`.
Kernel4 build_terminal(const Kernel4& kernel,
                       const std::vector<IndexSeq>& final_set);

// Runs the cascade on x.
Tensor3 apply_plan(const LoweredPlan& plan, const Tensor3& x,
                   const PaddingMode& pad);

}  // namespace convlower

#endif  // CONVLOWER_KERNEL_DECOMPOSE_H_
