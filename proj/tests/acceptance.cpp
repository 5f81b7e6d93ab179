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

// Acceptance runner: one "criterion N: PASS|FAIL <detail>" line per
// criterion. Exits 0 when every selected criterion passes or is listed in
// --known-failures, 77 when the requested dataset is absent, 1 otherwise.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chgate/analytics.hpp"
#include "chgate/gatednet.hpp"
#include "chgate/slicer.hpp"
#include "chgate/trainer.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"
#include "slicing.hpp"

namespace chgate {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string Fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

Verdict BetaCdf() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<double, double>> shapes{{0.6, 0.4}, {0.4, 0.6}, {2, 2}, {5, 1}, {0.5, 0.5}};
  double worst = 0.0;
  for (const auto& [a, b] : shapes) {
    const auto prior = PriorSpec::beta(a, b);
    for (int i = 1; i <= 99; ++i) worst = std::max(worst, std::abs(prior.cdf(i / 100.0) - oracle::beta_cdf(i / 100.0, a, b)));
  }
  const double secs = Seconds(t0);
  return {worst <= 1e-8 && secs < 1.0, "max abs err " + Fmt(worst, 3) + " in " + Fmt(secs, 3) + " s"};
}

Verdict ShapingGradient() {
  Rng rng(12);
  double worst = 0.0;
  for (const auto& prior : {PriorSpec::uniform(0, 1), PriorSpec::gaussian(0, 1), default_gate_prior()})
    for (std::size_t n : {5u, 32u, 256u}) worst = std::max(worst, scenario::shaping_gradient_error(prior, n, rng));
  const double hand = shaping_loss<double>(std::vector<double>(3, 0.0), {PriorSpec::uniform(0, 1), 1.0});
  return {worst <= 1e-5 && std::abs(hand - 0.2916667) <= 1e-7,
          "max rel err " + Fmt(worst, 3) + ", hand value " + Fmt(hand, 8)};
}

Verdict ShapingConvergence() {
  const auto t0 = Clock::now();
  const auto r = scenario::shaping_descent(64, 256, 2000, 50.0, default_gate_prior(), 17);
  const double secs = Seconds(t0);
  const double reduction = 1.0 - r.final_distance / r.initial_distance;
  return {reduction >= 0.95 && std::abs(r.final_mean - 0.6) <= 0.05 && secs < 120.0,
          "distance reduced " + Fmt(100 * reduction) + "%, mean activity " + Fmt(r.final_mean) + ", " +
              Fmt(secs, 3) + " s"};
}

Verdict MacCounter() {
  bool ok = true;
  std::string detail;
  for (const auto& [name, published] :
       std::vector<std::pair<std::string, double>>{{"resnet18", 1.81e9}, {"resnet34", 3.66e9}, {"resnet50", 4.09e9}}) {
    auto c = NetworkConfig::preset(name);
    c.gated = false;
    const double ours = static_cast<double>(mac_count(c).total());
    ok = ok && std::abs(ours / published - 1.0) <= 0.02;
    detail += name + " " + Fmt(ours / 1e9) + "G, ";
  }
  auto c = NetworkConfig::preset("resnet34");
  c.gated = false;
  const double params = static_cast<double>(parameter_count(c).total());
  ok = ok && std::abs(params / 21.79e6 - 1.0) <= 0.01;
  return {ok, detail + "resnet34 params " + Fmt(params / 1e6) + "M"};
}

Verdict GateOverheadRatio() {
  double lo = 1e300, hi = 0.0;
  std::size_t worst = 0, i = 0;
  for (const auto& b : NetworkConfig::preset("resnet34").blocks()) {
    const double r = gate_overhead_macs(b).ratio();
    if (r > hi) worst = i;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ++i;
  }
  return {lo >= 1e-5 && hi <= 1e-3,
          "block ratios in [" + Fmt(lo, 3) + ", " + Fmt(hi, 3) + "], largest at block " + std::to_string(worst)};
}

Verdict Slicer() {
  GatedResNet<float> r20(NetworkConfig::preset("resnet20"), 3);
  slicing::perturb_norm_statistics(r20, 4);
  const auto triples = slicing::random_block_triples(r20, 1000, 5);

  GatedResNet<float> desk(NetworkConfig::preset("desk8"), 8);
  slicing::perturb_norm_statistics(desk, 9);
  const auto agree = slicing::top1_agreement(desk, 500, 10);

  auto wide = NetworkConfig::preset("resnet20");
  wide.width_multiplier = 10;
  GatedResNet<float> big(wide, 1);
  const auto bench = slicing::forced_bench(big, 4, 0.1, 6);

  const bool ok = triples.max_abs_diff <= 1e-5 && agree.sliced_vs_masked == agree.examples &&
                  agree.sliced_vs_model == agree.examples && bench.predictions_agree &&
                  bench.sliced_over_dense < 0.9;
  return {ok, "max abs diff " + Fmt(triples.max_abs_diff, 3) + " over " + std::to_string(triples.cases) +
                  " triples, top-1 agree " + std::to_string(agree.sliced_vs_masked) + "/" +
                  std::to_string(agree.examples) + ", 10% sliced/dense " + Fmt(bench.sliced_over_dense, 3)};
}

Verdict StraightThrough() {
  const std::vector<double> logits{-2.0, 0.0, 2.0};
  const auto freq = scenario::firing_frequencies(logits, 100000, 31);
  double worst = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    worst = std::max(worst, std::abs(freq[i] - 1.0 / (1.0 + std::exp(-logits[i]))));
  const double fd = scenario::relaxed_slope_at_threshold(kGateTemperature);
  const double ag = scenario::relaxed_slope_autograd(5);
  const double slope_err = std::max(std::abs(fd - 0.375), std::abs(ag - 0.375)) / 0.375;
  return {worst <= 0.01 && slope_err <= 1e-4,
          "max frequency err " + Fmt(worst, 3) + ", slope " + Fmt(fd, 8) + " (autograd " + Fmt(ag, 8) + ")"};
}

Verdict L0Exact() {
  std::size_t cases = 0, exact = 0;
  for (std::size_t k : {1u, 7u, 136u, 1000u})
    for (double gamma : {0.01, 0.05, 0.1, 1.0}) {
      ++cases;
      const double want = 0.5 * gamma * static_cast<double>(k);
      const auto v = l0_loss(Variable<double>(Tensor<double>({k}, 0.0)), gamma);
      exact += l0_loss(std::vector<double>(k, 0.0), gamma) == want && v.value().item() == want;
    }
  return {exact == cases, std::to_string(exact) + "/" + std::to_string(cases) + " exact"};
}

Verdict Schedule() {
  const auto s = TrainSchedule::cifar_recipe(0.05);
  std::size_t exact = 0;
  const std::vector<double> probes{0, 50, 100, 200, 300, 499};
  for (double t : probes) {
    const double lambda = t < 100 ? 0.75 * (100 - t) / 100 : 0.0;
    const double gamma = t >= 300 ? 0.05 : t > 100 ? 0.05 * ((t - 100) / 200) : 0.0;
    exact += loss_coefficients(s, t) == LossCoefficients{lambda, gamma};
  }
  return {exact == probes.size(), std::to_string(exact) + "/" + std::to_string(probes.size()) + " probes exact"};
}

struct SmokeOptions {
  std::string data = "synthetic";
  std::string data_dir;
  std::string work_dir;
};

constexpr int kSkip = 77;

Verdict DeskSmoke(const SmokeOptions& o, int& exit_override) {
  const std::string root = CHGATE_SOURCE_DIR;
  ExperimentConfig cfg = load_config(root + (o.data == "cifar10" ? "/configs/desk_cifar10.yaml"
                                                                  : "/configs/desk_synthetic.yaml"));
  if (o.data == "cifar10") {
    cfg.data.path = o.data_dir;
    if (!fs::exists(fs::path(o.data_dir) / "data_batch_1.bin") || !fs::exists(fs::path(o.data_dir) / "test_batch.bin")) {
      exit_override = kSkip;
      return {false, "CIFAR-10 binaries not found under '" + o.data_dir + "'"};
    }
  }
  const fs::path work = o.work_dir.empty() ? fs::temp_directory_path() / "chgate_smoke" : fs::path(o.work_dir);
  const Datasets data = load_datasets(cfg);
  auto log = [](const char* tag) {
    return [tag](const EpochRecord& e) {
      std::cerr << tag << " epoch " << e.epoch << " test_acc " << Fmt(e.test_accuracy) << " macs "
                << Fmt(e.macs_fraction, 3) << std::endl;
    };
  };

  auto gated_cfg = cfg;
  gated_cfg.output_dir = (work / "gated").string();
  auto t0 = Clock::now();
  GatedResNet<float> gated(gated_cfg.network, gated_cfg.seed);
  const TrainResult g = train(gated, gated_cfg, data, log("gated"));
  const double gated_secs = Seconds(t0);

  auto plain_cfg = cfg;
  plain_cfg.network.gated = false;
  plain_cfg.output_dir = (work / "ungated").string();
  t0 = Clock::now();
  GatedResNet<float> plain(plain_cfg.network, plain_cfg.seed);
  const TrainResult u = train(plain, plain_cfg, data, log("ungated"));
  const double plain_secs = Seconds(t0);

  // (a) A second evaluation and a rerun of the first two epochs reproduce
  // the original bit for bit.
  const EvalResult again = evaluate(gated, data.test);
  auto rerun_cfg = gated_cfg;
  rerun_cfg.output_dir.clear();
  rerun_cfg.schedule.epochs = 2;
  GatedResNet<float> rerun(rerun_cfg.network, rerun_cfg.seed);
  const TrainResult r = train(rerun, rerun_cfg, data);
  bool deterministic = again.traces == g.final_eval.traces && again.accuracy == g.final_eval.accuracy;
  for (std::size_t e = 0; e < 2; ++e)
    deterministic = deterministic && r.history[e].to_json() == g.history[e].to_json();

  const double macs = g.final_eval.macs_fraction;
  const double gap = u.final_eval.accuracy - g.final_eval.accuracy;
  const auto cls = classify_gates(g.final_eval.traces);
  const double conditional = cls.overall.conditional;
  const bool in_time = gated_secs < 1800.0 && plain_secs < 1800.0;

  const bool ok = deterministic && macs <= 0.70 && gap <= 0.03 && conditional >= 0.10 && in_time;
  std::ostringstream d;
  d << o.data << ": deterministic " << (deterministic ? "yes" : "no") << ", MACs " << Fmt(100 * macs) << "% of full"
    << ", accuracy gated " << Fmt(100 * g.final_eval.accuracy) << "% vs ungated " << Fmt(100 * u.final_eval.accuracy)
    << "% (gap " << Fmt(100 * gap, 3) << " points), conditional gates " << Fmt(100 * conditional) << "%"
    << ", runtime " << Fmt(gated_secs / 60, 3) << " + " << Fmt(plain_secs / 60, 3) << " min";
  return {ok, d.str()};
}

}  // namespace
}  // namespace chgate

int main(int argc, char** argv) {
  using namespace chgate;
  CLI::App app{"Acceptance criteria runner", "chgate_acceptance"};
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> known;
  SmokeOptions smoke;
  app.add_option("--criteria", criteria, "Criteria to run")->delimiter(',');
  app.add_option("--known-failures", known, "Criteria that are expected to fail")->delimiter(',');
  app.add_option("--data", smoke.data, "Dataset for the desk-scale smoke run")
      ->check(CLI::IsMember({"synthetic", "cifar10"}));
  app.add_option("--data-dir", smoke.data_dir, "CIFAR-10 binary directory");
  app.add_option("--work-dir", smoke.work_dir, "Output directory for smoke runs");
  CLI11_PARSE(app, argc, argv);

  int exit_override = 0;
  const std::map<int, std::function<Verdict()>> runners{
      {1, BetaCdf},      {2, ShapingGradient},
      {3, ShapingConvergence}, {4, MacCounter},
      {5, GateOverheadRatio}, {6, Slicer},
      {7, StraightThrough}, {8, L0Exact},
      {9, [&] { return DeskSmoke(smoke, exit_override); }}, {10, Schedule}};
  const std::set<int> expected(known.begin(), known.end());
  bool ok = true;
  for (int c : criteria) {
    const auto it = runners.find(c);
    if (it == runners.end()) {
      std::cerr << "unknown criterion " << c << "\n";
      return 2;
    }
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (exit_override == kSkip) {
      std::cout << "criterion " << c << ": SKIP " << v.detail << std::endl;
      return kSkip;
    }
    std::cout << "criterion " << c << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail
              << (!v.pass && expected.count(c) ? " (known failure)" : "") << std::endl;
    ok = ok && (v.pass || expected.count(c) > 0);
  }
  return ok ? 0 : 1;
}
