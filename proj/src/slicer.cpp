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

#include "chgate/slicer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "chgate/kernels.hpp"
#include "json.hpp"

namespace chgate {

SlicePlan SlicePlan::full(std::size_t width) {
  SlicePlan p;
  p.width = width;
  p.active.resize(width);
  std::iota(p.active.begin(), p.active.end(), 0u);
  return p;
}

SlicePlan SlicePlan::from_mask(std::span<const float> mask) {
  SlicePlan p;
  p.width = mask.size();
  for (std::size_t c = 0; c < mask.size(); ++c)
    if (mask[c] != 0.0f) p.active.push_back(static_cast<std::uint32_t>(c));
  return p;
}

SlicePlan SlicePlan::random(std::size_t width, std::size_t count, Rng& rng) {
  if (count > width) throw std::invalid_argument("SlicePlan::random: count exceeds width");
  std::vector<std::uint32_t> all(width);
  std::iota(all.begin(), all.end(), 0u);
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(width - i)]);
  SlicePlan p;
  p.width = width;
  p.active.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(p.active.begin(), p.active.end());
  return p;
}

void SlicePlan::validate() const {
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] >= width) {
      throw std::invalid_argument("slice plan: channel " + std::to_string(active[i]) + " outside width " +
                                  std::to_string(width));
    }
    if (i > 0 && active[i] <= active[i - 1]) throw std::invalid_argument("slice plan: indices not increasing");
  }
}

std::vector<float> SlicePlan::mask() const {
  std::vector<float> m(width, 0.0f);
  for (auto c : active) m[c] = 1.0f;
  return m;
}

SlicedExecutor::Conv SlicedExecutor::snapshot(const ConvBn<float>& c) {
  Conv s;
  const Shape& ws = c.weight.shape();
  s.weight = c.weight.value().storage();
  s.out = ws[0];
  s.in = ws[1];
  s.kernel = ws[2];
  s.stride = c.stride;
  s.padding = c.padding;
  s.norm.mean = c.stats.running_mean.storage();
  s.norm.scale = c.scale.value().storage();
  s.norm.shift = c.shift.value().storage();
  s.norm.invstd.resize(s.out);
  for (std::size_t ch = 0; ch < s.out; ++ch) {
    s.norm.invstd[ch] =
        static_cast<float>(1.0 / std::sqrt(static_cast<double>(c.stats.running_var[ch]) + kBatchNormEpsilon));
  }
  return s;
}

SlicedExecutor::SlicedExecutor(GatedResNet<float>& model, std::size_t cache_limit) : cache_limit_(cache_limit) {
  stem_ = snapshot(model.stem);
  stem_pool_ = model.config().stem_pool;
  for (auto& gb : model.blocks) {
    Block b;
    b.config = gb.config();
    if (b.config.kind == BlockKind::kBottleneck) b.pre = snapshot(gb.pre);
    b.producer = snapshot(gb.producer);
    b.consumer = snapshot(gb.consumer);
    if (gb.shortcut) b.shortcut = snapshot(*gb.shortcut);
    b.gate = gb.gate ? &*gb.gate : nullptr;
    blocks_.push_back(std::move(b));
  }
  fc_weight_ = model.fc_weight.value().storage();
  fc_bias_ = model.fc_bias.value().storage();
  classes_ = model.config().classes;
}

std::size_t SlicedExecutor::cached_plans() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.cache.size();
  return n;
}

SlicedExecutor::Map SlicedExecutor::conv_norm(const Map& x, const float* weight, std::size_t in, std::size_t out,
                                              const Conv& geom, const Norm& norm, bool relu) {
  kernels::ConvGeometry g;
  g.batch = 1;
  g.in_channels = in;
  g.height = x.h;
  g.width = x.w;
  g.out_channels = out;
  g.kernel = geom.kernel;
  g.stride = geom.stride;
  g.padding = geom.padding;
  Map y;
  y.c = out;
  y.h = g.out_height();
  y.w = g.out_width();
  const std::size_t plane = y.h * y.w;
  y.data.resize(out * plane);
  kernels::conv2d_forward(g, x.data.data(), weight, y.data.data());
  macs_ += static_cast<std::uint64_t>(in) * out * geom.kernel * geom.kernel * plane;
  for (std::size_t ch = 0; ch < out; ++ch) {
    float* p = y.data.data() + ch * plane;
    const float m = norm.mean[ch], is = norm.invstd[ch], s = norm.scale[ch], b = norm.shift[ch];
    for (std::size_t k = 0; k < plane; ++k) {
      const float v = (p[k] - m) * is * s + b;
      p[k] = relu ? std::max(v, 0.0f) : v;
    }
  }
  return y;
}

SlicePlan SlicedExecutor::decide(Block& b, const Map& x) {
  if (b.gate == nullptr) return SlicePlan::full(b.config.mid_channels);
  NoGradGuard no_grad;
  Variable<float> v(Tensor<float>(Shape{1, x.c, x.h, x.w}, x.data));
  const GateOutput<float> g = gate_forward(v, *b.gate, Mode::kEval, nullptr);
  return SlicePlan::from_mask(g.hard.data());
}

const SlicedExecutor::Slice& SlicedExecutor::slice(Block& b, const SlicePlan& plan) {
  auto it = b.cache.find(plan.active);
  if (it != b.cache.end()) return it->second;
  if (b.cache.size() >= cache_limit_) b.cache.clear();
  const Conv& p = b.producer;
  const Conv& c = b.consumer;
  const std::size_t a = plan.active.size();
  const std::size_t pk = p.in * p.kernel * p.kernel;
  const std::size_t k2 = c.kernel * c.kernel;
  Slice s;
  s.producer.resize(a * pk);
  s.consumer.resize(c.out * a * k2);
  for (std::size_t i = 0; i < a; ++i) {
    const std::size_t ch = plan.active[i];
    std::copy_n(p.weight.begin() + static_cast<std::ptrdiff_t>(ch * pk), pk,
                s.producer.begin() + static_cast<std::ptrdiff_t>(i * pk));
    s.norm.mean.push_back(p.norm.mean[ch]);
    s.norm.invstd.push_back(p.norm.invstd[ch]);
    s.norm.scale.push_back(p.norm.scale[ch]);
    s.norm.shift.push_back(p.norm.shift[ch]);
  }
  for (std::size_t o = 0; o < c.out; ++o) {
    for (std::size_t i = 0; i < a; ++i) {
      std::copy_n(c.weight.begin() + static_cast<std::ptrdiff_t>((o * c.in + plan.active[i]) * k2), k2,
                  s.consumer.begin() + static_cast<std::ptrdiff_t>((o * a + i) * k2));
    }
  }
  return b.cache.emplace(plan.active, std::move(s)).first->second;
}

Tensor<float> SlicedExecutor::block_forward(std::size_t index, const Tensor<float>& x, Path path,
                                            const SlicePlan* forced, SlicePlan* used) {
  Block& b = blocks_.at(index);
  const GatedBlockConfig& cfg = b.config;
  if (x.shape() != Shape{1, cfg.in_channels, cfg.in_height, cfg.in_width}) {
    throw std::invalid_argument("sliced block " + std::to_string(index) + ": input " + shape_str(x.shape()) +
                                " does not match [1," + std::to_string(cfg.in_channels) + "," +
                                std::to_string(cfg.in_height) + "," + std::to_string(cfg.in_width) + "]");
  }
  Map in{x.storage(), cfg.in_channels, cfg.in_height, cfg.in_width};
  Map t = b.pre ? conv_norm(in, b.pre->weight.data(), b.pre->in, b.pre->out, *b.pre, b.pre->norm, true) : in;

  SlicePlan plan;
  if (path != Path::kDense) {
    if (forced != nullptr) {
      if (forced->width != cfg.mid_channels) {
        throw std::invalid_argument("slice plan width " + std::to_string(forced->width) + " != block width " +
                                    std::to_string(cfg.mid_channels));
      }
      forced->validate();
      plan = *forced;
    } else {
      plan = decide(b, in);
    }
  } else {
    plan = SlicePlan::full(cfg.mid_channels);
  }
  if (used != nullptr) *used = plan;

  const Conv& p = b.producer;
  const Conv& c = b.consumer;
  Map y;
  const std::uint64_t before = macs_;
  if (path == Path::kSliced) {
    const std::size_t a = plan.active.size();
    if (a == 0) {
      y.c = c.out;
      y.h = cfg.out_height();
      y.w = cfg.out_width();
      const std::size_t plane = y.h * y.w;
      y.data.resize(c.out * plane);
      for (std::size_t ch = 0; ch < c.out; ++ch) {
        const float v = (0.0f - c.norm.mean[ch]) * c.norm.invstd[ch] * c.norm.scale[ch] + c.norm.shift[ch];
        std::fill_n(y.data.begin() + static_cast<std::ptrdiff_t>(ch * plane), plane, v);
      }
    } else {
      const Slice& s = slice(b, plan);
      Map h = conv_norm(t, s.producer.data(), p.in, a, p, s.norm, true);
      y = conv_norm(h, s.consumer.data(), a, c.out, c, c.norm, false);
    }
  } else {
    Map h = conv_norm(t, p.weight.data(), p.in, p.out, p, p.norm, true);
    if (path == Path::kMasked) {
      const std::size_t plane = h.h * h.w;
      const std::vector<float> m = plan.mask();
      for (std::size_t ch = 0; ch < h.c; ++ch)
        for (std::size_t k = 0; k < plane; ++k) h.data[ch * plane + k] *= m[ch];
    }
    y = conv_norm(h, c.weight.data(), c.in, c.out, c, c.norm, false);
  }
  gated_macs_ += macs_ - before;

  const Map sc =
      b.shortcut ? conv_norm(in, b.shortcut->weight.data(), b.shortcut->in, b.shortcut->out, *b.shortcut,
                             b.shortcut->norm, false)
                 : in;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = std::max(y.data[i] + sc.data[i], 0.0f);
  return Tensor<float>(Shape{1, y.c, y.h, y.w}, std::move(y.data));
}

Tensor<float> SlicedExecutor::forward(const Tensor<float>& image, Path path, const std::vector<SlicePlan>* forced,
                                      std::vector<SlicePlan>* used) {
  if (forced != nullptr && forced->size() != blocks_.size()) {
    throw std::invalid_argument("forward: " + std::to_string(forced->size()) + " plans for " +
                                std::to_string(blocks_.size()) + " blocks");
  }
  if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != stem_.in) {
    throw std::invalid_argument("sliced forward expects [1," + std::to_string(stem_.in) + ",H,W], got " +
                                shape_str(image.shape()));
  }
  Map x{image.storage(), image.dim(1), image.dim(2), image.dim(3)};
  x = conv_norm(x, stem_.weight.data(), stem_.in, stem_.out, stem_, stem_.norm, true);
  if (stem_pool_) {
    Map p;
    p.c = x.c;
    p.h = (x.h + 2 - 3) / 2 + 1;
    p.w = (x.w + 2 - 3) / 2 + 1;
    p.data.assign(p.c * p.h * p.w, -std::numeric_limits<float>::infinity());
    for (std::size_t ch = 0; ch < p.c; ++ch)
      for (std::size_t oh = 0; oh < p.h; ++oh)
        for (std::size_t ow = 0; ow < p.w; ++ow) {
          float& dst = p.data[(ch * p.h + oh) * p.w + ow];
          for (std::size_t kh = 0; kh < 3; ++kh)
            for (std::size_t kw = 0; kw < 3; ++kw) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * 2 + kh) - 1;
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * 2 + kw) - 1;
              if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(x.h) ||
                  iw >= static_cast<std::ptrdiff_t>(x.w))
                continue;
              dst = std::max(dst, x.data[(ch * x.h + static_cast<std::size_t>(ih)) * x.w +
                                         static_cast<std::size_t>(iw)]);
            }
        }
    x = std::move(p);
  }
  if (used != nullptr) used->assign(blocks_.size(), SlicePlan{});
  Tensor<float> t(Shape{1, x.c, x.h, x.w}, std::move(x.data));
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    t = block_forward(b, t, path, forced ? &(*forced)[b] : nullptr, used ? &(*used)[b] : nullptr);
  }
  const std::size_t c = t.dim(1), plane = t.dim(2) * t.dim(3);
  std::vector<float> pooled(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    float s = 0.0f;
    for (std::size_t k = 0; k < plane; ++k) s += t[ch * plane + k];
    pooled[ch] = s / static_cast<float>(plane);
  }
  Tensor<float> logits(Shape{1, classes_});
  for (std::size_t k = 0; k < classes_; ++k) {
    float s = fc_bias_[k];
    for (std::size_t ch = 0; ch < c; ++ch) s += fc_weight_[k * c + ch] * pooled[ch];
    logits[k] = s;
  }
  macs_ += static_cast<std::uint64_t>(classes_) * c;
  return logits;
}

double active_parameters(const NetworkConfig& config, std::span<const std::size_t> active) {
  const auto blocks = config.blocks();
  if (active.size() != blocks.size()) throw std::invalid_argument("active_parameters: block count mismatch");
  double total = static_cast<double>(parameter_count(config).total());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const bool bottleneck = b.kind == BlockKind::kBottleneck;
    const double producer_in = static_cast<double>(bottleneck ? b.mid_channels : b.in_channels);
    const double consumer_k2 = bottleneck ? 1.0 : static_cast<double>(b.kernel * b.kernel);
    const double per_channel =
        producer_in * static_cast<double>(b.kernel * b.kernel) + 2.0 + static_cast<double>(b.out_channels) * consumer_k2;
    total -= per_channel * static_cast<double>(b.mid_channels - active[i]);
  }
  return total;
}

namespace {

std::size_t argmax(const Tensor<float>& logits) {
  return static_cast<std::size_t>(std::max_element(logits.data().begin(), logits.data().end()) -
                                  logits.data().begin());
}

PathTiming summarize(const std::vector<double>& ms) {
  PathTiming t;
  if (ms.empty()) return t;
  double s = 0.0;
  for (double v : ms) s += v;
  t.mean_ms = s / static_cast<double>(ms.size());
  double ss = 0.0;
  for (double v : ms) ss += (v - t.mean_ms) * (v - t.mean_ms);
  t.std_ms = ms.size() > 1 ? std::sqrt(ss / static_cast<double>(ms.size() - 1)) : 0.0;
  return t;
}

}  // namespace

BenchReport bench(GatedResNet<float>& model, const std::vector<Tensor<float>>& images, std::span<const int> labels,
                  const BenchOptions& options) {
  if (images.empty()) throw std::invalid_argument("bench: no images");
  if (!labels.empty() && labels.size() != images.size()) {
    throw std::invalid_argument("bench: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(images.size()) + " images");
  }
  const NetworkConfig& config = model.config();
  SlicedExecutor ex(model);
  std::optional<std::vector<SlicePlan>> forced;
  if (options.forced_fraction) {
    const double f = *options.forced_fraction;
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("bench: forced fraction must be in [0,1]");
    Rng rng(derive_seed(options.seed, {0xb3c4}));
    forced.emplace();
    for (const auto& b : config.blocks()) {
      const auto count = static_cast<std::size_t>(std::llround(f * static_cast<double>(b.mid_channels)));
      forced->push_back(SlicePlan::random(b.mid_channels, count, rng));
    }
  }
  const std::vector<SlicePlan>* plans = forced ? &*forced : nullptr;

  BenchReport r;
  r.model = config.name;
  r.examples = images.size();
  r.warmup = options.warmup;
  r.repetitions = options.repetitions;
  r.forced_fraction = options.forced_fraction.value_or(-1.0);
  const MacReport full = mac_count(config);
  r.macs_full = full.total();
  r.params_total = parameter_count(config).total();

  // Untimed pass: accounting, accuracy, and prediction agreement.
  double macs = 0.0, params = 0.0;
  std::size_t correct = 0;
  std::uint64_t dense_gated = 0, sliced_gated = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<SlicePlan> used;
    ex.reset_macs();
    const std::size_t masked = argmax(ex.forward(images[i], SlicedExecutor::Path::kMasked, plans));
    ex.reset_macs();
    ex.forward(images[i], SlicedExecutor::Path::kDense);
    dense_gated += ex.executed_gated_macs();
    ex.reset_macs();
    const std::size_t sliced = argmax(ex.forward(images[i], SlicedExecutor::Path::kSliced, plans, &used));
    sliced_gated += ex.executed_gated_macs();
    r.predictions_agree = r.predictions_agree && masked == sliced;
    if (!labels.empty() && static_cast<int>(sliced) == labels[i]) ++correct;
    std::vector<std::size_t> active;
    for (const auto& p : used) active.push_back(p.active.size());
    macs += static_cast<double>(conditional_macs(config, active));
    params += active_parameters(config, active);
  }
  const double n = static_cast<double>(images.size());
  r.macs_avg = macs / n;
  r.params_active_avg = params / n;
  r.gated_mac_fraction = dense_gated == 0 ? 0.0 : static_cast<double>(sliced_gated) / static_cast<double>(dense_gated);
  if (!labels.empty()) r.accuracy = static_cast<double>(correct) / n;

  const SlicedExecutor::Path paths[3] = {SlicedExecutor::Path::kDense, SlicedExecutor::Path::kMasked,
                                         SlicedExecutor::Path::kSliced};
  for (std::size_t w = 0; w < options.warmup; ++w)
    for (auto p : paths) ex.forward(images[w % images.size()], p, plans);
  std::vector<double> samples[3];
  using clock = std::chrono::steady_clock;
  for (std::size_t rep = 0; rep < options.repetitions; ++rep) {
    for (const auto& img : images) {
      for (int k = 0; k < 3; ++k) {
        const auto t0 = clock::now();
        ex.forward(img, paths[k], plans);
        samples[k].push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
      }
    }
  }
  r.dense = summarize(samples[0]);
  r.masked = summarize(samples[1]);
  r.sliced = summarize(samples[2]);
  r.sliced_over_dense = r.dense.mean_ms > 0.0 ? r.sliced.mean_ms / r.dense.mean_ms : 0.0;
  return r;
}

std::string BenchReport::to_json() const {
  auto timing = [](const PathTiming& t) { return nlohmann::json{{"mean_ms", t.mean_ms}, {"std_ms", t.std_ms}}; };
  nlohmann::ordered_json j;
  j["model"] = model;
  j["examples"] = examples;
  j["warmup"] = warmup;
  j["repetitions"] = repetitions;
  j["forced_fraction"] = forced_fraction;
  j["latency"] = {{"dense", timing(dense)}, {"masked", timing(masked)}, {"sliced", timing(sliced)}};
  j["sliced_over_dense"] = sliced_over_dense;
  j["params"] = {{"total", params_total}, {"active_avg", params_active_avg}};
  j["macs"] = {{"full", macs_full}, {"avg", macs_avg}, {"gated_fraction", gated_mac_fraction}};
  j["accuracy"] = accuracy;
  j["predictions_agree"] = predictions_agree;
  return j.dump(2);
}

BenchReport BenchReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto timing = [](const nlohmann::json& t) {
    return PathTiming{t.at("mean_ms").get<double>(), t.at("std_ms").get<double>()};
  };
  BenchReport r;
  r.model = j.at("model").get<std::string>();
  r.examples = j.at("examples").get<std::size_t>();
  r.warmup = j.at("warmup").get<std::size_t>();
  r.repetitions = j.at("repetitions").get<std::size_t>();
  r.forced_fraction = j.at("forced_fraction").get<double>();
  r.dense = timing(j.at("latency").at("dense"));
  r.masked = timing(j.at("latency").at("masked"));
  r.sliced = timing(j.at("latency").at("sliced"));
  r.sliced_over_dense = j.at("sliced_over_dense").get<double>();
  r.params_total = j.at("params").at("total").get<std::uint64_t>();
  r.params_active_avg = j.at("params").at("active_avg").get<double>();
  r.macs_full = j.at("macs").at("full").get<std::uint64_t>();
  r.macs_avg = j.at("macs").at("avg").get<double>();
  r.gated_mac_fraction = j.at("macs").at("gated_fraction").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.predictions_agree = j.at("predictions_agree").get<bool>();
  return r;
}

}  // namespace chgate
