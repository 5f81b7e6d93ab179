/* Copyright 2026 The chgate Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Checkpoint file layout (all integers little-endian):
//
//   "CHGCKPT\0"  u32 version  u32 count
//   count x { u32 name_len, name bytes, u32 ndim, ndim x u64 extent, u64 offset }
//   float32 payload; `offset` is relative to the start of the payload
//
// Parameters and batch-norm running statistics are stored under their
// model names, so a checkpoint restores both training and evaluation state.

#ifndef CHGATE_CHECKPOINT_HPP_
#define CHGATE_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "chgate/gatednet.hpp"

namespace chgate {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  Tensor<float> value;
};

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint(const std::string& path);

/// Snapshot of every parameter and buffer of `model`.
std::vector<CheckpointEntry> model_state(GatedResNet<float>& model);
/// Restores `model` from a snapshot. Names and shapes must match exactly.
void load_model_state(GatedResNet<float>& model, const std::vector<CheckpointEntry>& entries);

inline void save_model(GatedResNet<float>& model, const std::string& path) {
  write_checkpoint(path, model_state(model));
}
inline void load_model(GatedResNet<float>& model, const std::string& path) {
  load_model_state(model, read_checkpoint(path));
}

}  // namespace chgate

#endif  // CHGATE_CHECKPOINT_HPP_
