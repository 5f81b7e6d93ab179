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

#include "chgate/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "chgate/analytics.hpp"
#include "chgate/checkpoint.hpp"
#include "chgate/gradcheck.hpp"
#include "chgate/slicer.hpp"
#include "chgate/trainer.hpp"
#include "json.hpp"

namespace chgate {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string out;
  std::optional<double> gamma;
  std::optional<double> lambda;
};

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.gamma) cfg.schedule.l0_gamma_final = *c.gamma;
  if (c.lambda) cfg.schedule.bs_lambda_start = *c.lambda;
  cfg.schedule.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

int cmd_train(const Common& c, bool ungated, std::optional<std::size_t> epochs, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(c);
  if (ungated) cfg.network.gated = false;
  if (epochs) cfg.schedule.epochs = *epochs;
  const Datasets data = load_datasets(cfg);
  GatedResNet<float> model(cfg.network, cfg.seed);
  out << "training " << cfg.network.name << (cfg.network.gated ? " (gated)" : " (ungated)") << " on "
      << data.train.size() << " examples for " << cfg.schedule.epochs << " epochs -> " << cfg.output_dir << "\n";
  const TrainResult r = train(model, cfg, data, [&](const EpochRecord& e) {
    out << "epoch " << e.epoch << " loss " << fmt(e.train_loss, 4) << " train_acc " << fmt(e.train_accuracy, 4)
        << " test_acc " << fmt(e.test_accuracy, 4) << " gates " << fmt(e.test_gate_activity, 3) << " macs "
        << fmt(e.macs_fraction, 3) << " lambda " << fmt(e.coefficients.lambda, 3) << " gamma "
        << fmt(e.coefficients.gamma, 3) << std::endl;
  });
  out << "final test accuracy " << fmt(r.final_eval.accuracy, 4) << ", average MACs "
      << fmt(r.final_eval.macs_fraction * 100.0, 4) << "% of full\n";
  return 0;
}

int cmd_eval(const Common& c, std::ostream& out) {
  if (c.checkpoint.empty()) throw CLI::RequiredError("--checkpoint");
  ExperimentConfig cfg = resolve_config(c);
  const Datasets data = load_datasets(cfg);
  GatedResNet<float> model(cfg.network, cfg.seed);
  load_model(model, c.checkpoint);
  const EvalResult r = evaluate(model, data.test);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  write_traces((dir / "traces.bin").string(), r.traces);
  ordered_json j;
  j["examples"] = data.test.size();
  j["accuracy"] = r.accuracy;
  j["gate_activity"] = r.gate_activity;
  j["macs_full"] = mac_count(cfg.network).total();
  j["macs_avg"] = r.macs_avg;
  j["macs_fraction"] = r.macs_fraction;
  write_text(dir / "eval.json", j.dump(2) + "\n");
  out << "accuracy " << fmt(r.accuracy, 4) << ", average MACs " << fmt(r.macs_avg, 8) << " ("
      << fmt(r.macs_fraction * 100.0, 4) << "% of full), traces -> " << (dir / "traces.bin").string() << "\n";
  return 0;
}

int cmd_bench(const Common& c, std::size_t examples, const BenchOptions& options, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(c);
  const Datasets data = load_datasets(cfg);
  GatedResNet<float> model(cfg.network, cfg.seed);
  if (!c.checkpoint.empty()) load_model(model, c.checkpoint);
  std::vector<Tensor<float>> images;
  std::vector<int> labels;
  for (std::size_t i = 0; i < std::min(examples, data.test.size()); ++i) {
    images.push_back(data.test.example(i));
    labels.push_back(data.test.labels[i]);
  }
  const BenchReport r = bench(model, images, labels, options);
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "bench.json", r.to_json() + "\n");
  }
  auto row = [&](const char* name, const PathTiming& t) {
    out << std::left << std::setw(8) << name << fmt(t.mean_ms, 4) << " +- " << fmt(t.std_ms, 3) << " ms\n";
  };
  out << "model " << r.model << ", " << r.examples << " examples x " << r.repetitions << " repetitions\n";
  row("dense", r.dense);
  row("masked", r.masked);
  row("sliced", r.sliced);
  out << "sliced/dense " << fmt(r.sliced_over_dense, 4) << ", params " << r.params_total << " total / "
      << fmt(r.params_active_avg, 8) << " active, MACs " << r.macs_full << " full / " << fmt(r.macs_avg, 8)
      << " average, accuracy " << fmt(r.accuracy, 4) << "\n";
  return 0;
}

std::pair<double, double> parse_thresholds(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("--thresholds", "expected ON,OFF");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--thresholds", "expected two numbers ON,OFF, got '" + text + "'");
  }
}

int cmd_analyze(const Common& c, const std::string& traces_path, const std::string& thresholds, std::size_t top_k,
                std::ostream& out) {
  const TraceSet traces = read_traces(traces_path);
  if (!c.config.empty()) {
    const ExperimentConfig cfg = resolve_config(c);
    const auto bad = verify_trace_macs(traces, cfg.network);
    if (bad >= 0) throw std::runtime_error("trace row " + std::to_string(bad) + " MACs disagree with its gate bits");
  }
  ClassifyOptions opts;
  if (!thresholds.empty()) std::tie(opts.on_threshold, opts.off_threshold) = parse_thresholds(thresholds);
  const GateClassification cls = classify_gates(traces, opts);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  ordered_json j;

  std::ostringstream gates;
  gates << "layer,index,rate,label\n";
  j["gates"] = ordered_json::array();
  for (const auto& g : cls.gates) {
    gates << g.layer << ',' << g.index << ',' << fmt(g.rate, 17) << ',' << gate_label_name(g.label) << '\n';
    j["gates"].push_back({{"layer", g.layer}, {"index", g.index}, {"rate", g.rate}, {"label", gate_label_name(g.label)}});
  }
  write_text(dir / "gates.csv", gates.str());

  std::ostringstream layers;
  layers << "layer,always_on,always_off,conditional\n";
  j["layers"] = ordered_json::array();
  auto fractions_json = [](const LabelFractions& f) {
    return ordered_json{{"always_on", f.always_on}, {"always_off", f.always_off}, {"conditional", f.conditional}};
  };
  for (std::size_t l = 0; l < cls.per_layer.size(); ++l) {
    const auto& f = cls.per_layer[l];
    layers << l << ',' << fmt(f.always_on, 17) << ',' << fmt(f.always_off, 17) << ',' << fmt(f.conditional, 17)
           << '\n';
    auto lj = fractions_json(f);
    lj["layer"] = l;
    j["layers"].push_back(lj);
  }
  layers << "all," << fmt(cls.overall.always_on, 17) << ',' << fmt(cls.overall.always_off, 17) << ','
         << fmt(cls.overall.conditional, 17) << '\n';
  j["overall"] = fractions_json(cls.overall);
  write_text(dir / "layers.csv", layers.str());

  std::vector<std::int32_t> classes;
  for (const auto& r : traces.rows) classes.push_back(r.label);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const auto order = global_firing_order(traces);
  std::ostringstream firing;
  firing << "class,layer,rank,gate,rate\n";
  j["class_firing"] = ordered_json::array();
  for (std::int32_t k : classes) {
    const auto hist = per_class_firing(traces, k, &order);
    for (std::size_t l = 0; l < hist.size(); ++l)
      for (std::size_t r = 0; r < hist[l].size(); ++r) {
        firing << k << ',' << l << ',' << r << ',' << order[l][r] << ',' << fmt(hist[l][r], 17) << '\n';
        j["class_firing"].push_back(
            {{"class", k}, {"layer", l}, {"rank", r}, {"gate", order[l][r]}, {"rate", hist[l][r]}});
      }
  }
  write_text(dir / "class_firing.csv", firing.str());

  const MacRanking rank = mac_ranking(traces, std::min(top_k, traces.rows.size()));
  std::vector<std::uint32_t> macs_by_id;
  std::ostringstream ranking;
  ranking << "kind,rank,id,macs,label\n";
  auto emit = [&](const char* kind, const std::vector<std::uint32_t>& ids) {
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto it = std::find_if(traces.rows.begin(), traces.rows.end(),
                                   [&](const GateTrace& t) { return t.id == ids[i]; });
      ranking << kind << ',' << i << ',' << ids[i] << ',' << it->macs << ',' << it->label << '\n';
      arr.push_back({{"rank", i}, {"id", ids[i]}, {"macs", it->macs}, {"label", it->label}});
    }
    j["mac_ranking"][kind] = arr;
  };
  emit("lowest", rank.lowest);
  emit("highest", rank.highest);
  write_text(dir / "mac_ranking.csv", ranking.str());
  write_text(dir / "analysis.json", j.dump(2) + "\n");

  out << traces.rows.size() << " traces, " << traces.gate_count() << " gates: " << fmt(cls.overall.always_on * 100, 4)
      << "% always on, " << fmt(cls.overall.always_off * 100, 4) << "% always off, "
      << fmt(cls.overall.conditional * 100, 4) << "% conditional -> " << dir.string() << "\n";
  return 0;
}

int cmd_gradcheck(const Common& c, std::ostream& out) {
  const auto results = run_gradcheck_suite(c.seed.value_or(0));
  bool ok = true;
  out << std::left << std::setw(24) << "check" << std::setw(14) << "max_rel_err" << std::setw(12) << "tolerance"
      << "status\n";
  for (const auto& r : results) {
    out << std::left << std::setw(24) << r.name << std::setw(14) << fmt(r.max_rel_error, 3) << std::setw(12)
        << fmt(r.tolerance, 2) << (r.passed() ? "ok" : "FAIL");
    if (r.small_entries > 0) {
      out << "  (" << r.small_entries << " near-zero entries, max abs err " << fmt(r.max_abs_error_small, 3) << ")";
    }
    out << "\n";
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

int cmd_export(const Common& c, const std::vector<std::string>& metrics, const std::string& traces_path,
               std::ostream& out) {
  if (metrics.empty() && traces_path.empty()) {
    throw CLI::ValidationError("export", "give --metrics and/or --traces");
  }
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  std::size_t files = 0;
  if (!metrics.empty()) {
    std::ostringstream dat;
    dat << "# macs_fraction test_accuracy\n";
    for (const auto& path : metrics) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open metrics log '" + path + "'");
      std::string line, last;
      while (std::getline(in, line))
        if (!line.empty()) last = line;
      if (last.empty()) throw std::runtime_error("metrics log '" + path + "' is empty");
      const auto j = nlohmann::json::parse(last);
      dat << fmt(j.at("macs_fraction").get<double>(), 10) << ' ' << fmt(j.at("test_accuracy").get<double>(), 10)
          << '\n';
    }
    write_text(dir / "accuracy_vs_macs.dat", dat.str());
    ++files;
  }
  if (!traces_path.empty()) {
    const TraceSet traces = read_traces(traces_path);
    const auto rates = firing_rates(traces);
    for (std::size_t l = 0; l < traces.layer_widths.size(); ++l) {
      std::vector<double> layer(rates.begin() + static_cast<std::ptrdiff_t>(traces.layer_offset(l)),
                                rates.begin() + static_cast<std::ptrdiff_t>(traces.layer_offset(l) + traces.layer_widths[l]));
      std::sort(layer.begin(), layer.end(), std::greater<>());
      std::ostringstream dat;
      dat << "# rank firing_rate\n";
      for (std::size_t i = 0; i < layer.size(); ++i) dat << i << ' ' << fmt(layer[i], 10) << '\n';
      write_text(dir / ("gate_rates_layer" + std::to_string(l) + ".dat"), dat.str());
      ++files;
    }
    std::vector<std::uint32_t> macs;
    for (const auto& r : traces.rows) macs.push_back(r.macs);
    std::sort(macs.begin(), macs.end());
    std::ostringstream dat;
    dat << "# rank macs\n";
    for (std::size_t i = 0; i < macs.size(); ++i) dat << i << ' ' << macs[i] << '\n';
    write_text(dir / "mac_distribution.dat", dat.str());
    ++files;
  }
  out << "wrote " << files << " data files to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Channel-gated residual networks: training, sliced inference, and gate analytics", "chgate"};
  app.require_subcommand(1);
  Common c;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "Experiment config (YAML)")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Experiment seed (overrides the config)");
    sub->add_option("--checkpoint", c.checkpoint, "Model checkpoint");
    sub->add_option("--out", c.out, "Output directory");
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  common(train_cmd);
  train_cmd->add_option("--gamma", c.gamma, "Final L0 coefficient");
  train_cmd->add_option("--lambda", c.lambda, "Initial batch-shaping coefficient");
  bool ungated = false;
  std::optional<std::size_t> epochs;
  train_cmd->add_flag("--ungated", ungated, "Train the ungated baseline");
  train_cmd->add_option("--epochs", epochs, "Override the number of epochs");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and write gate traces");
  common(eval_cmd);

  auto* bench_cmd = app.add_subcommand("bench", "Time dense, masked and sliced inference at batch size one");
  common(bench_cmd);
  std::size_t examples = 50;
  BenchOptions bopts;
  std::optional<double> fraction;
  bench_cmd->add_option("--examples", examples, "Test examples to time");
  bench_cmd->add_option("--repetitions", bopts.repetitions, "Measured repetitions");
  bench_cmd->add_option("--warmup", bopts.warmup, "Warm-up runs");
  bench_cmd->add_option("--fraction", fraction, "Force this fraction of channels active in every block")
      ->check(CLI::Range(0.0, 1.0));

  auto* analyze_cmd = app.add_subcommand("analyze", "Classify gates and rank examples from a trace file");
  common(analyze_cmd);
  std::string traces;
  std::string thresholds;
  std::size_t top_k = 8;
  analyze_cmd->add_option("--traces", traces, "Gate trace file")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--thresholds", thresholds, "Always-on and always-off rates, ON,OFF (default 0.99,0.01)");
  analyze_cmd->add_option("--top-k", top_k, "Examples per end of the MAC ranking");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  grad_cmd->add_option("--seed", c.seed, "Suite seed");

  auto* export_cmd = app.add_subcommand("export", "Write two-column data files for plotting");
  common(export_cmd);
  std::vector<std::string> metrics;
  std::string export_traces;
  export_cmd->add_option("--metrics", metrics, "metrics.jsonl of one or more runs")->check(CLI::ExistingFile);
  export_cmd->add_option("--traces", export_traces, "Gate trace file")->check(CLI::ExistingFile);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("chgate");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << "\n" << app.help();
    return code;
  }

  try {
    if (*train_cmd) return cmd_train(c, ungated, epochs, out);
    if (*eval_cmd) return cmd_eval(c, out);
    if (*bench_cmd) {
      bopts.forced_fraction = fraction;
      bopts.seed = c.seed.value_or(0);
      return cmd_bench(c, examples, bopts, out);
    }
    if (*analyze_cmd) return cmd_analyze(c, traces, thresholds, top_k, out);
    if (*grad_cmd) return cmd_gradcheck(c, out);
    if (*export_cmd) return cmd_export(c, metrics, export_traces, out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataUnavailable& e) {
    err << "data unavailable: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace chgate
