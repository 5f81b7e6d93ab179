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

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "chgate/trainer.hpp"

namespace chgate {

namespace {

class Section {
 public:
  Section(const YAML::Node& node, std::string source, std::string path, std::set<std::string> keys)
      : node_(node), source_(std::move(source)), path_(std::move(path)) {
    if (!node_.IsMap()) fail(node_, "expected a mapping");
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) fail(kv.first, "unknown key '" + qualified(key) + "'");
    }
  }

  bool has(const std::string& key) const { return node_[key].IsDefined() && !node_[key].IsNull(); }

  template <typename T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    const YAML::Node v = node_[key];
    try {
      if constexpr (std::is_same_v<T, std::size_t>) {
        const long long x = v.as<long long>();
        if (x < 0) fail(v, "'" + qualified(key) + "' must be non-negative");
        out = static_cast<std::size_t>(x);
      } else {
        out = v.as<T>();
      }
    } catch (const YAML::Exception&) {
      fail(v, "'" + qualified(key) + "' has the wrong type (value '" + scalar(v) + "')");
    }
  }

  Section child(const std::string& key, std::set<std::string> keys) const {
    return Section(node_[key], source_, qualified(key), std::move(keys));
  }
  const YAML::Node& node() const { return node_; }
  YAML::Node at(const std::string& key) const { return node_[key]; }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    const auto mark = at.Mark();
    std::ostringstream os;
    os << source_;
    if (mark.line >= 0) os << ':' << mark.line + 1 << ':' << mark.column + 1;
    os << ": " << what;
    throw ConfigError(os.str());
  }

 private:
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  static std::string scalar(const YAML::Node& n) { return n.IsScalar() ? n.Scalar() : "<non-scalar>"; }

  YAML::Node node_;
  std::string source_;
  std::string path_;
};

void read_network(const Section& s, NetworkConfig& net) {
  if (s.has("preset")) {
    std::string name;
    s.read("preset", name);
    try {
      net = NetworkConfig::preset(name);
    } catch (const std::invalid_argument& e) {
      s.fail(s.at("preset"), e.what());
    }
  }
  if (s.has("block")) {
    std::string kind;
    s.read("block", kind);
    if (kind == "basic") {
      net.block = BlockKind::kBasic;
    } else if (kind == "bottleneck") {
      net.block = BlockKind::kBottleneck;
    } else {
      s.fail(s.at("block"), "network.block must be 'basic' or 'bottleneck', got '" + kind + "'");
    }
  }
  s.read("name", net.name);
  s.read("in_channels", net.in_channels);
  s.read("resolution", net.resolution);
  s.read("classes", net.classes);
  s.read("stem_channels", net.stem_channels);
  s.read("stem_kernel", net.stem_kernel);
  s.read("stem_stride", net.stem_stride);
  s.read("stem_pool", net.stem_pool);
  s.read("stage_widths", net.stage_widths);
  s.read("blocks_per_stage", net.blocks_per_stage);
  s.read("width_multiplier", net.width_multiplier);
  s.read("gated", net.gated);
  s.read("temperature", net.temperature);
}

void read_schedule(const Section& s, TrainSchedule& t) {
  if (s.has("recipe")) {
    std::string name;
    s.read("recipe", name);
    if (name != "cifar10") s.fail(s.at("recipe"), "unknown schedule recipe '" + name + "' (expected cifar10)");
    t = TrainSchedule::cifar_recipe(t.l0_gamma_final);
  }
  s.read("epochs", t.epochs);
  s.read("batch_size", t.batch_size);
  s.read("lr", t.lr);
  s.read("lr_milestones", t.lr_milestones);
  s.read("lr_divisor", t.lr_divisor);
  s.read("momentum", t.momentum);
  s.read("weight_decay", t.weight_decay);
  s.read("gate_weight_decay", t.gate_weight_decay);
  s.read("bs_lambda", t.bs_lambda_start);
  s.read("bs_anneal_end", t.bs_anneal_end);
  s.read("bs_fixed", t.bs_fixed);
  s.read("l0_start", t.l0_start);
  s.read("l0_rampup_end", t.l0_rampup_end);
  s.read("l0_gamma", t.l0_gamma_final);
  s.read("per_step", t.per_step);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  ExperimentConfig c;
  if (root.IsNull()) return c;
  const Section top(root, source, "",
                    {"seed", "output_dir", "checkpoint_every", "network", "data", "schedule", "prior"});
  top.read("seed", c.seed);
  top.read("output_dir", c.output_dir);
  top.read("checkpoint_every", c.checkpoint_every);
  if (top.has("network")) {
    read_network(top.child("network", {"preset", "name", "block", "in_channels", "resolution", "classes",
                                       "stem_channels", "stem_kernel", "stem_stride", "stem_pool", "stage_widths",
                                       "blocks_per_stage", "width_multiplier", "gated", "temperature"}),
                 c.network);
  }
  if (top.has("data")) {
    const Section d = top.child("data", {"kind", "path", "train_size", "test_size", "image_size", "augment"});
    d.read("kind", c.data.kind);
    if (c.data.kind != "synthetic" && c.data.kind != "cifar10") {
      d.fail(d.at("kind"), "data.kind must be 'synthetic' or 'cifar10', got '" + c.data.kind + "'");
    }
    d.read("path", c.data.path);
    d.read("train_size", c.data.train_size);
    d.read("test_size", c.data.test_size);
    d.read("image_size", c.data.image_size);
    if (d.has("augment")) {
      const Section a = d.child("augment", {"pad", "flip"});
      a.read("pad", c.data.augment.pad);
      a.read("flip", c.data.augment.flip);
    }
  }
  if (top.has("schedule")) {
    read_schedule(top.child("schedule", {"recipe", "epochs", "batch_size", "lr", "lr_milestones", "lr_divisor",
                                         "momentum", "weight_decay", "gate_weight_decay", "bs_lambda",
                                         "bs_anneal_end", "bs_fixed", "l0_start", "l0_rampup_end", "l0_gamma",
                                         "per_step"}),
                  c.schedule);
  }
  if (top.has("prior")) {
    const Section p = top.child("prior", {"kind", "params"});
    std::string kind = "beta";
    std::vector<double> params{0.6, 0.4};
    p.read("kind", kind);
    p.read("params", params);
    try {
      c.prior = PriorSpec::from_params(kind, params);
    } catch (const std::invalid_argument& e) {
      p.fail(p.node(), e.what());
    }
  }
  try {
    c.network.validate();
    c.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (c.data.kind == "synthetic" && c.data.image_size != c.network.resolution) {
    throw ConfigError(source + ": data.image_size (" + std::to_string(c.data.image_size) +
                      ") must equal network.resolution (" + std::to_string(c.network.resolution) + ")");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace chgate
