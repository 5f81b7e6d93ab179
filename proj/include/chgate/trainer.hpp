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

// Training loop for gated networks. The objective per step is
//
//   cross_entropy + lambda(t) * shaping(soft gates) + gamma(t) * L0(gate logits)
//
// with lambda annealed linearly to zero first and gamma ramped up linearly
// afterwards.

#ifndef CHGATE_TRAINER_HPP_
#define CHGATE_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chgate/batchshape.hpp"
#include "chgate/data.hpp"
#include "chgate/gatednet.hpp"
#include "chgate/trace.hpp"

namespace chgate {

struct TrainSchedule {
  std::size_t epochs = 40;
  std::size_t batch_size = 128;
  double lr = 0.1;
  std::vector<std::size_t> lr_milestones{24, 30, 36};
  double lr_divisor = 10.0;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double gate_weight_decay = 0.0;
  double bs_lambda_start = 0.75;
  double bs_anneal_end = 8;
  bool bs_fixed = false;
  double l0_start = 8;
  double l0_rampup_end = 24;
  double l0_gamma_final = 0.05;
  /// Interpolate coefficients within an epoch instead of once per epoch.
  bool per_step = false;

  /// The 500-epoch CIFAR-10 recipe.
  static TrainSchedule cifar_recipe(double gamma_final = 0.05);
  void validate() const;
};

struct LossCoefficients {
  double lambda = 0.0;
  double gamma = 0.0;
  friend bool operator==(const LossCoefficients&, const LossCoefficients&) = default;
};

/// Coefficients at a (possibly fractional) epoch.
LossCoefficients loss_coefficients(const TrainSchedule& schedule, double epoch);
double learning_rate(const TrainSchedule& schedule, std::size_t epoch);

/// Nesterov SGD: d = g + wd * p;  v = mu * v + d;  p -= lr * (d + mu * v).
/// Gating parameters use `gate_weight_decay` instead of `weight_decay`.
class NesterovSgd {
 public:
  NesterovSgd(double momentum, double weight_decay, double gate_weight_decay)
      : momentum_(momentum), weight_decay_(weight_decay), gate_weight_decay_(gate_weight_decay) {}
  void step(std::vector<NamedParam<float>>& params, double lr);
  const std::vector<std::vector<float>>& velocity() const { return velocity_; }

 private:
  double momentum_;
  double weight_decay_;
  double gate_weight_decay_;
  std::vector<std::vector<float>> velocity_;
};

struct StepMetrics {
  double total = 0.0;
  double task = 0.0;
  double shaping = 0.0;
  double l0 = 0.0;
  double gate_activity = 0.0;  // fraction of open gates in the batch
  std::size_t correct = 0;
  std::size_t examples = 0;
};

/// Raised when the loss becomes non-finite; the message lists every term.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& what, StepMetrics metrics)
      : std::runtime_error(what), metrics_(metrics) {}
  const StepMetrics& metrics() const { return metrics_; }

 private:
  StepMetrics metrics_;
};

/// One forward/backward/update on a batch. The L0 term is averaged over the
/// batch; the shaping term is summed over gates, each gate seeing the batch.
StepMetrics train_step(GatedResNet<float>& model, const Tensor<float>& images, std::span<const int> labels,
                       const LossCoefficients& coefficients, const PriorSpec& prior, NesterovSgd& optimizer,
                       double lr, Rng& noise);

struct EvalResult {
  double accuracy = 0.0;
  double gate_activity = 0.0;
  double macs_avg = 0.0;
  double macs_fraction = 0.0;  // macs_avg / full MACs
  TraceSet traces;
};

/// Eval-mode pass recording one trace row per example (ids are indices).
EvalResult evaluate(GatedResNet<float>& model, const Dataset& data, std::size_t batch_size = 250);

struct DataConfig {
  std::string kind = "synthetic";  // synthetic | cifar10
  std::string path = "data/cifar-10-batches-bin";
  std::size_t train_size = 10000;
  std::size_t test_size = 2000;
  std::size_t image_size = 16;  // synthetic only
  Augmentation augment;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  std::size_t checkpoint_every = 10;
  NetworkConfig network = NetworkConfig::preset("desk8");
  DataConfig data;
  TrainSchedule schedule;
  PriorSpec prior = default_gate_prior();
};

/// Config parse or validation failure; `what()` cites file and line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Raised when an on-disk dataset is missing.
class DataUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Datasets {
  Dataset train;
  Dataset test;
};
/// Builds train/test sets for the config; CIFAR-10 is read from
/// `data.path` (or the CIFAR10_DIR environment variable when set).
Datasets load_datasets(const ExperimentConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossCoefficients coefficients;
  double train_loss = 0.0;
  double task_loss = 0.0;
  double shaping_loss = 0.0;
  double l0_loss = 0.0;
  double train_accuracy = 0.0;
  double train_gate_activity = 0.0;
  double test_accuracy = 0.0;
  double test_gate_activity = 0.0;
  double macs_avg = 0.0;
  double macs_fraction = 0.0;

  std::string to_json() const;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  EvalResult final_eval;
};

/// Trains from scratch. When `config.output_dir` is non-empty the run writes
/// metrics.jsonl, periodic checkpoints, final.ckpt and test traces there.
/// `on_epoch` is called after every epoch.
TrainResult train(GatedResNet<float>& model, const ExperimentConfig& config, const Datasets& data,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace chgate

#endif  // CHGATE_TRAINER_HPP_
