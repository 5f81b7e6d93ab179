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

#include "chgate/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chgate/checkpoint.hpp"
#include "json.hpp"

namespace chgate {

TrainSchedule TrainSchedule::cifar_recipe(double gamma_final) {
  TrainSchedule s;
  s.epochs = 500;
  s.batch_size = 256;
  s.lr = 0.1;
  s.lr_milestones = {300, 375, 450};
  s.weight_decay = 5e-4;
  s.bs_lambda_start = 0.75;
  s.bs_anneal_end = 100;
  s.l0_start = 100;
  s.l0_rampup_end = 300;
  s.l0_gamma_final = gamma_final;
  return s;
}

void TrainSchedule::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("schedule: " + what); };
  if (epochs == 0) fail("epochs must be positive");
  if (batch_size < 2) fail("batch_size must be at least 2 (batch norm needs two samples)");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(lr_divisor >= 1.0)) fail("lr_divisor must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0,1)");
  if (weight_decay < 0.0 || gate_weight_decay < 0.0) fail("weight decay must be >= 0");
  if (bs_lambda_start < 0.0 || l0_gamma_final < 0.0) fail("loss coefficients must be >= 0");
  if (bs_anneal_end < 0.0 || l0_start < 0.0) fail("phase boundaries must be >= 0");
  if (l0_rampup_end < l0_start) fail("l0_rampup_end must not precede l0_start");
  if (!bs_fixed && bs_lambda_start > 0.0 && l0_gamma_final > 0.0 && l0_start < bs_anneal_end) {
    fail("l0_start (" + std::to_string(l0_start) + ") must not precede bs_anneal_end (" +
         std::to_string(bs_anneal_end) + ")");
  }
  for (std::size_t i = 1; i < lr_milestones.size(); ++i)
    if (lr_milestones[i] <= lr_milestones[i - 1]) fail("lr_milestones must be increasing");
}

LossCoefficients loss_coefficients(const TrainSchedule& s, double epoch) {
  LossCoefficients c;
  if (s.bs_fixed) {
    c.lambda = s.bs_lambda_start;
    return c;
  }
  if (epoch < s.bs_anneal_end) c.lambda = s.bs_lambda_start * (s.bs_anneal_end - epoch) / s.bs_anneal_end;
  if (epoch >= s.l0_rampup_end) {
    c.gamma = s.l0_gamma_final;
  } else if (epoch > s.l0_start) {
    c.gamma = s.l0_gamma_final * ((epoch - s.l0_start) / (s.l0_rampup_end - s.l0_start));
  }
  return c;
}

double learning_rate(const TrainSchedule& s, std::size_t epoch) {
  double lr = s.lr;
  for (std::size_t m : s.lr_milestones)
    if (epoch >= m) lr /= s.lr_divisor;
  return lr;
}

void NesterovSgd::step(std::vector<NamedParam<float>>& params, double lr) {
  if (velocity_.empty()) {
    for (const auto& p : params) velocity_.emplace_back(p.var.size(), 0.0f);
  }
  if (velocity_.size() != params.size()) throw std::logic_error("optimizer: parameter list changed size");
  const float mu = static_cast<float>(momentum_);
  const float step = static_cast<float>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Variable<float>& var = params[i].var;
    float* p = var.mutable_value().raw();
    std::vector<float>& v = velocity_[i];
    if (v.size() != var.size()) throw std::logic_error("optimizer: parameter '" + params[i].name + "' resized");
    const float wd = static_cast<float>(params[i].gating ? gate_weight_decay_ : weight_decay_);
    const bool has = var.has_grad();
    const float* g = has ? var.node()->grad.raw() : nullptr;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const float d = (has ? g[k] : 0.0f) + wd * p[k];
      v[k] = mu * v[k] + d;
      p[k] -= step * (d + mu * v[k]);
    }
    var.zero_grad();
  }
}

namespace {

std::size_t argmax_row(const Tensor<float>& logits, std::size_t row) {
  const std::size_t k = logits.dim(1);
  const float* p = logits.raw() + row * k;
  return static_cast<std::size_t>(std::max_element(p, p + k) - p);
}

}  // namespace

StepMetrics train_step(GatedResNet<float>& model, const Tensor<float>& images, std::span<const int> labels,
                       const LossCoefficients& coefficients, const PriorSpec& prior, NesterovSgd& optimizer,
                       double lr, Rng& noise) {
  const std::size_t n = images.dim(0);
  auto out = model.forward(Variable<float>(images), Mode::kTrain, &noise);
  Variable<float> task = ops::softmax_cross_entropy(out.logits, labels);
  Variable<float> total = task;
  StepMetrics m;
  m.examples = n;
  m.task = task.value().item();
  if (coefficients.lambda > 0.0) {
    const ShapingConfig cfg{prior, coefficients.lambda};
    for (const auto& g : out.gates) {
      Variable<float> s = shaping_loss(g.soft, cfg);
      m.shaping += s.value().item();
      total = ops::add(total, s);
    }
  }
  if (coefficients.gamma > 0.0) {
    for (const auto& g : out.gates) {
      Variable<float> l = l0_loss(g.logits, coefficients.gamma / static_cast<double>(n));
      m.l0 += l.value().item();
      total = ops::add(total, l);
    }
  }
  m.total = total.value().item();
  std::size_t open = 0, gates = 0;
  for (const auto& g : out.gates) {
    for (float h : g.hard.data()) open += h > 0.0f;
    gates += g.hard.size();
  }
  m.gate_activity = gates == 0 ? 1.0 : static_cast<double>(open) / static_cast<double>(gates);
  for (std::size_t i = 0; i < n; ++i) m.correct += static_cast<int>(argmax_row(out.logits.value(), i)) == labels[i];

  if (!std::isfinite(m.total)) {
    std::ostringstream os;
    os << "non-finite training loss: total=" << m.total << " task=" << m.task << " shaping=" << m.shaping
       << " l0=" << m.l0 << " lambda=" << coefficients.lambda << " gamma=" << coefficients.gamma << " lr=" << lr;
    throw TrainingDiverged(os.str(), m);
  }
  backward(total);
  auto params = model.parameters();
  optimizer.step(params, lr);
  return m;
}

EvalResult evaluate(GatedResNet<float>& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  NoGradGuard no_grad;
  const NetworkConfig& config = model.config();
  const auto blocks = config.blocks();
  EvalResult r;
  r.traces.layer_widths.clear();
  for (auto w : config.gate_widths()) r.traces.layer_widths.push_back(static_cast<std::uint32_t>(w));
  std::size_t correct = 0, open = 0, gates = 0;
  double macs = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    std::vector<std::size_t> idx(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    auto out = model.forward(Variable<float>(data.gather(idx)), Mode::kEval);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      GateTrace row;
      row.id = static_cast<std::uint32_t>(idx[i]);
      row.label = data.labels[idx[i]];
      std::vector<std::size_t> active;
      for (const auto& g : out.gates) {
        std::size_t a = 0;
        for (std::size_t c = 0; c < g.width(); ++c) {
          const bool on = g.hard.at(i, c) > 0.0f;
          row.bits.push_back(on ? 1 : 0);
          a += on;
        }
        active.push_back(a);
        open += a;
        gates += g.width();
      }
      if (out.gates.empty()) {
        for (const auto& b : blocks) active.push_back(b.mid_channels);
      }
      const std::uint64_t m = conditional_macs(config, active);
      row.macs = trace_macs(m);
      macs += static_cast<double>(m);
      correct += static_cast<int>(argmax_row(out.logits.value(), i)) == row.label;
      r.traces.rows.push_back(std::move(row));
    }
  }
  const double n = static_cast<double>(data.size());
  r.accuracy = static_cast<double>(correct) / n;
  r.gate_activity = gates == 0 ? 1.0 : static_cast<double>(open) / static_cast<double>(gates);
  r.macs_avg = macs / n;
  r.macs_fraction = r.macs_avg / static_cast<double>(mac_count(config).total());
  return r;
}

Datasets load_datasets(const ExperimentConfig& config) {
  const DataConfig& d = config.data;
  Datasets out;
  if (d.kind == "cifar10") {
    std::string dir = d.path;
    if (const char* env = std::getenv("CIFAR10_DIR"); env != nullptr && *env != '\0') dir = env;
    const auto first = std::filesystem::path(dir) / "data_batch_1.bin";
    if (!std::filesystem::exists(first)) {
      throw DataUnavailable("CIFAR-10 binary batches not found in '" + dir +
                            "' (set data.path or CIFAR10_DIR to the cifar-10-batches-bin directory)");
    }
    out.train = load_cifar10(dir, true, d.train_size);
    out.test = load_cifar10(dir, false, d.test_size);
  } else if (d.kind == "synthetic") {
    const std::size_t classes = config.network.classes;
    out.train = synthetic_conditional_dataset(derive_seed(config.seed, {0xda7a, 0}), d.train_size, classes,
                                              d.image_size);
    out.test = synthetic_conditional_dataset(derive_seed(config.seed, {0xda7a, 1}), d.test_size, classes,
                                             d.image_size);
    const auto [mean, sd] = out.train.channel_stats();
    out.train.normalize(mean, sd);
    out.test.normalize(mean, sd);
  } else {
    throw std::invalid_argument("unknown dataset kind '" + d.kind + "' (expected synthetic or cifar10)");
  }
  if (out.train.classes != config.network.classes) {
    throw std::invalid_argument("dataset has " + std::to_string(out.train.classes) + " classes, network expects " +
                                std::to_string(config.network.classes));
  }
  return out;
}

std::string EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["lambda"] = coefficients.lambda;
  j["gamma"] = coefficients.gamma;
  j["train_loss"] = train_loss;
  j["task_loss"] = task_loss;
  j["shaping_loss"] = shaping_loss;
  j["l0_loss"] = l0_loss;
  j["train_accuracy"] = train_accuracy;
  j["train_gate_activity"] = train_gate_activity;
  j["test_accuracy"] = test_accuracy;
  j["test_gate_activity"] = test_gate_activity;
  j["macs_avg"] = macs_avg;
  j["macs_fraction"] = macs_fraction;
  return j.dump();
}

TrainResult train(GatedResNet<float>& model, const ExperimentConfig& config, const Datasets& data,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  const TrainSchedule& s = config.schedule;
  s.validate();
  if (data.train.size() < s.batch_size) throw std::invalid_argument("training set smaller than one batch");
  namespace fs = std::filesystem;
  const bool write = !config.output_dir.empty();
  std::ofstream log;
  if (write) {
    fs::create_directories(config.output_dir);
    log.open(fs::path(config.output_dir) / "metrics.jsonl", std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write metrics to '" + config.output_dir + "'");
  }
  NesterovSgd opt(s.momentum, s.weight_decay, s.gate_weight_decay);
  const std::size_t steps = data.train.size() / s.batch_size;
  TrainResult result;
  for (std::size_t epoch = 0; epoch < s.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = learning_rate(s, epoch);
    rec.coefficients = loss_coefficients(s, static_cast<double>(epoch));
    Rng shuffle_rng(derive_seed(config.seed, {0x7a1, 1, epoch}));
    Rng aug_rng(derive_seed(config.seed, {0x7a1, 2, epoch}));
    Rng noise(derive_seed(config.seed, {0x7a1, 3, epoch}));
    const std::vector<std::size_t> perm = shuffled_indices(data.train.size(), shuffle_rng);
    std::size_t correct = 0, seen = 0;
    double activity = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      const std::span<const std::size_t> idx(perm.data() + step * s.batch_size, s.batch_size);
      Tensor<float> batch = data.train.gather(idx);
      augment(batch, config.data.augment, aug_rng);
      std::vector<int> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = data.train.labels[idx[i]];
      const LossCoefficients c =
          s.per_step ? loss_coefficients(s, static_cast<double>(epoch) + static_cast<double>(step) / steps)
                     : rec.coefficients;
      const StepMetrics m = train_step(model, batch, labels, c, config.prior, opt, rec.lr, noise);
      rec.train_loss += m.total;
      rec.task_loss += m.task;
      rec.shaping_loss += m.shaping;
      rec.l0_loss += m.l0;
      activity += m.gate_activity;
      correct += m.correct;
      seen += m.examples;
    }
    rec.train_loss /= static_cast<double>(steps);
    rec.task_loss /= static_cast<double>(steps);
    rec.shaping_loss /= static_cast<double>(steps);
    rec.l0_loss /= static_cast<double>(steps);
    rec.train_gate_activity = activity / static_cast<double>(steps);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    EvalResult ev = evaluate(model, data.test);
    rec.test_accuracy = ev.accuracy;
    rec.test_gate_activity = ev.gate_activity;
    rec.macs_avg = ev.macs_avg;
    rec.macs_fraction = ev.macs_fraction;
    if (write) {
      log << rec.to_json() << '\n' << std::flush;
      if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
        save_model(model, (fs::path(config.output_dir) / ("epoch_" + std::to_string(epoch + 1) + ".ckpt")).string());
      }
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (epoch + 1 == s.epochs) result.final_eval = std::move(ev);
  }
  if (write) {
    save_model(model, (fs::path(config.output_dir) / "final.ckpt").string());
    write_traces((fs::path(config.output_dir) / "test_traces.bin").string(), result.final_eval.traces);
  }
  return result;
}

}  // namespace chgate
