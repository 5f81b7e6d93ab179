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

#include "chgate/checkpoint.hpp"

#include <cstring>
#include <map>
#include <stdexcept>

#include "chgate/byteio.hpp"

namespace chgate {

namespace {

constexpr char kMagic[8] = {'C', 'H', 'G', 'C', 'K', 'P', 'T', '\0'};

}  // namespace

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u32(static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) w.u64(d);
    w.u64(offset);
    offset += 4 * static_cast<std::uint64_t>(e.value.size());
  }
  for (const auto& e : entries)
    for (float v : e.value.data()) w.f32(v);
  write_file(path, w.buffer());
}

std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
  const std::vector<unsigned char> data = read_file(path);
  ByteReader r(data, path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) r.fail("not a checkpoint file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  struct Pending {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Pending> manifest;
  for (std::uint32_t i = 0; i < count; ++i) {
    Pending p;
    p.name.resize(r.u32());
    r.bytes(p.name.data(), p.name.size());
    const std::uint32_t ndim = r.u32();
    if (ndim > 8) r.fail("entry '" + p.name + "' has rank " + std::to_string(ndim));
    for (std::uint32_t d = 0; d < ndim; ++d) p.shape.push_back(static_cast<std::size_t>(r.u64()));
    p.offset = r.u64();
    manifest.push_back(std::move(p));
  }
  const std::size_t payload = r.position();
  std::vector<CheckpointEntry> out;
  for (const auto& p : manifest) {
    const std::size_t n = shape_numel(p.shape);
    if (p.offset + 4 * n > data.size() - payload) r.fail("payload of '" + p.name + "' runs past end of file");
    ByteReader pr(data, path, payload + p.offset);
    std::vector<float> values(n);
    for (auto& v : values) v = pr.f32();
    out.push_back({p.name, Tensor<float>(p.shape, std::move(values))});
  }
  return out;
}

std::vector<CheckpointEntry> model_state(GatedResNet<float>& model) {
  std::vector<CheckpointEntry> out;
  for (const auto& p : model.parameters()) out.push_back({p.name, p.var.value()});
  for (const auto& b : model.buffers()) out.push_back({b.name, *b.tensor});
  return out;
}

void load_model_state(GatedResNet<float>& model, const std::vector<CheckpointEntry>& entries) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e.value;
  auto take = [&](const std::string& name, Tensor<float>& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint is missing '" + name + "'");
    if (it->second->shape() != dst.shape()) {
      throw std::runtime_error("checkpoint entry '" + name + "' has shape " + shape_str(it->second->shape()) +
                               ", model expects " + shape_str(dst.shape()));
    }
    dst = *it->second;
    by_name.erase(it);
  };
  for (auto& p : model.parameters()) take(p.name, p.var.mutable_value());
  for (auto& b : model.buffers()) take(b.name, *b.tensor);
  if (!by_name.empty()) {
    throw std::runtime_error("checkpoint has unexpected entry '" + by_name.begin()->first + "'");
  }
}

}  // namespace chgate
