// Copyright 2026 The etaopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ETAOPT_HARNESS_HPP
#define ETAOPT_HARNESS_HPP

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "etaopt/config.hpp"
#include "etaopt/data.hpp"
#include "etaopt/errors.hpp"
#include "etaopt/models.hpp"
#include "etaopt/optimizers.hpp"

namespace etaopt {

inline constexpr std::string_view kMetricsHeader =
    "run_id,epoch,iter,eta,train_loss,test_loss,train_acc,test_acc,probe_evals_cumulative,wall_ms";

/// One logged point. Losses use the model's configured reduction; missing
/// values (no test split, regression accuracy, wall time off) stay empty.
struct MetricsRow {
  std::string run_id;
  std::size_t epoch = 0;
  std::size_t iter = 0;
  double eta = 0.0;
  double train_loss = 0.0;
  std::optional<double> test_loss;
  std::optional<double> train_acc;
  std::optional<double> test_acc;
  std::size_t probe_evals_cumulative = 0;
  std::optional<double> wall_ms;
};

inline std::string to_csv_line(const MetricsRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_real(*v) : std::string(); };
  return r.run_id + ',' + std::to_string(r.epoch) + ',' + std::to_string(r.iter) + ',' +
         detail::format_real(r.eta) + ',' + detail::format_real(r.train_loss) + ',' +
         opt(r.test_loss) + ',' + opt(r.train_acc) + ',' + opt(r.test_acc) + ',' +
         std::to_string(r.probe_evals_cumulative) + ',' + opt(r.wall_ms);
}

enum class RunStatus { completed, diverged };

struct RunResult {
  std::filesystem::path metrics_path;
  std::filesystem::path summary_path;
  RunStatus status = RunStatus::completed;
  std::string message;
  std::size_t iterations = 0;
  std::vector<MetricsRow> rows;
};

using AnyModel = std::variant<LinearRegressionModel, LogisticRegressionModel, MlpModel>;

/// Dataset after loading, splitting and optional standardization.
inline Splits prepare_data(const ExperimentConfig& cfg) {
  Dataset ds;
  const DatasetConfig& d = cfg.dataset;
  switch (d.kind) {
    case DatasetKind::csv: ds = load_csv(d.csv_path, d.csv_target, d.csv_header); break;
    case DatasetKind::idx: ds = load_idx(d.idx_images, d.idx_labels); break;
    case DatasetKind::synthetic_regression:
      ds = synthesize_regression(d.synth_n, d.synth_d, d.synth_noise_std, d.synth_seed).data;
      break;
    case DatasetKind::synthetic_classification:
      ds = synthesize_classification(d.synth_n, d.synth_d, d.synth_classes, d.synth_separation,
                                     d.synth_seed);
      break;
  }
  Splits s = split(ds, cfg.split);
  if (d.normalize) standardize(s);
  return s;
}

inline AnyModel build_model(const ModelConfig& m, const Dataset& train) {
  switch (m.kind) {
    case ModelKind::linreg: return linreg_build(train.input_dim(), m.seed, m.reduction);
    case ModelKind::logreg:
      return logreg_build(train.input_dim(), train.class_count, m.seed, m.reduction);
    case ModelKind::mlp: {
      std::vector<std::size_t> sizes{train.input_dim()};
      sizes.insert(sizes.end(), m.hidden.begin(), m.hidden.end());
      sizes.push_back(train.class_count);
      return mlp_build(std::move(sizes), m.seed, m.reduction);
    }
  }
  throw ConfigError("unknown model kind");
}

template <class Model>
ParamVector initial_weights_of(const Model& m) {
  return ParamVector(m.initial_weights());
}

/// Fraction of rows whose argmax prediction matches the label.
template <class Model>
std::optional<double> accuracy(const Model& model, const ParamVector& w, const Dataset& ds) {
  if constexpr (requires { model.predict_class(w, ds.features.row(0)); }) {
    if (ds.size() == 0) return std::nullopt;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (static_cast<double>(model.predict_class(w, ds.features.row(i))) == ds.targets[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
  } else {
    return std::nullopt;
  }
}

/// Loss under the model's reduction plus both sum and per-example mean forms.
struct LossPair {
  double reported = 0.0;
  double sum = 0.0;
  double mean = 0.0;
};

template <class Model>
LossPair evaluate_loss(const Model& model, const ParamVector& w, const Batch& b) {
  const double v = model.loss(w, b);
  const double n = static_cast<double>(b.size());
  return model.reduction() == Reduction::sum ? LossPair{v, v, v / n} : LossPair{v, v * n, v};
}

namespace detail {

inline void write_summary(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  out << "key,value\n";
  for (const auto& [k, v] : kv) out << k << ',' << v << '\n';
}

template <class Model>
RunResult train(const ExperimentConfig& cfg, const Splits& data, const Model& model) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  RunResult result;
  result.metrics_path = cfg.output_dir / (cfg.run_id + ".metrics.csv");
  result.summary_path = cfg.output_dir / (cfg.run_id + ".summary.csv");
  std::ofstream metrics(result.metrics_path);
  if (!metrics) throw ConfigError("cannot write " + result.metrics_path.string());
  metrics << kMetricsHeader << '\n';

  const auto started = std::chrono::steady_clock::now();
  const Batch train_all = data.train.to_batch();
  const std::optional<Batch> test_all =
      data.test.size() ? std::optional<Batch>(data.test.to_batch()) : std::nullopt;

  OptimizerState state = OptimizerState::start(initial_weights_of(model), cfg.hyper);
  const LossPair initial_train = evaluate_loss(model, state.w, train_all);

  std::size_t probes = 0;
  std::optional<double> best_test_acc;
  std::size_t best_test_acc_epoch = 0;
  double min_eta = std::numeric_limits<double>::infinity();
  LossPair last_train = initial_train;
  std::optional<LossPair> last_test;

  auto log_row = [&](std::size_t epoch) {
    MetricsRow row;
    row.run_id = cfg.run_id;
    row.epoch = epoch;
    row.iter = state.t;
    row.eta = state.eta;
    last_train = evaluate_loss(model, state.w, train_all);
    row.train_loss = last_train.reported;
    if (test_all) {
      last_test = evaluate_loss(model, state.w, *test_all);
      row.test_loss = last_test->reported;
    }
    row.train_acc = accuracy(model, state.w, data.train);
    row.test_acc = accuracy(model, state.w, data.test);
    row.probe_evals_cumulative = probes;
    if (cfg.record_wall_time) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    }
    metrics << to_csv_line(row) << '\n';
    min_eta = std::min(min_eta, row.eta);
    if (row.test_acc && (!best_test_acc || *row.test_acc > *best_test_acc)) {
      best_test_acc = row.test_acc;
      best_test_acc_epoch = epoch;
    }
    result.rows.push_back(std::move(row));
    if (!std::isfinite(last_train.reported)) {
      throw DivergenceError("training loss became non-finite at iteration " + std::to_string(state.t));
    }
  };

  std::size_t epochs_done = 0;
  try {
    if (cfg.full_batch()) {
      const Batch* val = nullptr;
      std::optional<Batch> val_all;
      if (cfg.strategy.kind == Strategy::second_order_valprobe) {
        val_all = data.val.to_batch();
        val = &*val_all;
      }
      for (std::size_t e = 1; e <= cfg.epochs; ++e) {
        probes += step(state, cfg.strategy, model, train_all, val).probe_count;
        log_row(e);
        epochs_done = e;
      }
    } else {
      const BatchIterator batches(data.train, cfg.batch_size, cfg.run_seed);
      std::optional<BatchIterator> val_batches;
      std::vector<Batch> val_epoch;
      std::size_t val_epoch_no = 0, val_pos = 0;
      if (cfg.strategy.kind == Strategy::second_order_valprobe) {
        val_batches.emplace(data.val, std::max<std::size_t>(1, cfg.val_batch_size),
                            splitmix64(cfg.run_seed + 1));
        val_epoch = val_batches->epoch(val_epoch_no);
      }
      for (std::size_t e = 1; e <= cfg.epochs; ++e) {
        const auto epoch_batches = batches.epoch(e - 1);
        for (std::size_t i = 0; i < epoch_batches.size(); ++i) {
          const Batch* val = nullptr;
          if (val_batches) {
            if (val_pos == val_epoch.size()) {
              val_epoch = val_batches->epoch(++val_epoch_no);
              val_pos = 0;
            }
            val = &val_epoch[val_pos++];
          }
          probes += step(state, cfg.strategy, model, epoch_batches[i], val).probe_count;
          const bool epoch_end = i + 1 == epoch_batches.size();
          if (epoch_end || state.t % cfg.log_every == 0) log_row(e);
        }
        epochs_done = e;
      }
    }
  } catch (const DivergenceError& e) {
    result.status = RunStatus::diverged;
    result.message = e.what();
  } catch (const DivergedProbe& e) {
    result.status = RunStatus::diverged;
    result.message = e.what();
  }
  result.iterations = state.t;

  auto real = [](double v) { return format_real(v); };
  std::vector<std::pair<std::string, std::string>> kv{
      {"run_id", cfg.run_id},
      {"strategy", std::string(to_string(cfg.strategy.kind))},
      {"reduction", std::string(to_string(cfg.model.reduction))},
      {"status", result.status == RunStatus::completed ? "completed" : "diverged"},
      {"iterations", std::to_string(state.t)},
      {"epochs_completed", std::to_string(epochs_done)},
      {"probe_evals", std::to_string(probes)},
      {"initial_train_loss_sum", real(initial_train.sum)},
      {"initial_train_loss_mean", real(initial_train.mean)},
      {"final_train_loss_sum", real(last_train.sum)},
      {"final_train_loss_mean", real(last_train.mean)},
      {"final_test_loss_sum", last_test ? real(last_test->sum) : ""},
      {"final_test_loss_mean", last_test ? real(last_test->mean) : ""},
      {"final_eta", real(state.eta)},
      {"min_eta", std::isfinite(min_eta) ? real(min_eta) : ""},
      {"best_test_acc", best_test_acc ? real(*best_test_acc) : ""},
      {"best_test_acc_epoch", best_test_acc ? std::to_string(best_test_acc_epoch) : ""},
  };
  if (!result.message.empty()) {
    std::string msg = result.message;
    for (char& c : msg) {
      if (c == ',' || c == '\n') c = ';';
    }
    kv.emplace_back("message", msg);
  }
  write_summary(result.summary_path, kv);
  return result;
}

}  // namespace detail

/// Runs one configured experiment, writing <output_dir>/<run_id>.metrics.csv
/// and <run_id>.summary.csv. Divergence is reported through the result
/// status; the rows logged so far are kept.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Splits data = prepare_data(cfg);
  if (data.train.size() == 0) throw ConfigError("training split is empty");
  const AnyModel model = build_model(cfg.model, data.train);
  return std::visit([&](const auto& m) { return detail::train(cfg, data, m); }, model);
}

}  // namespace etaopt

#endif  // ETAOPT_HARNESS_HPP
