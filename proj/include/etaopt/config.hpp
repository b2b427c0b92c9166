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

#ifndef ETAOPT_CONFIG_HPP
#define ETAOPT_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "etaopt/data.hpp"
#include "etaopt/errors.hpp"
#include "etaopt/models.hpp"
#include "etaopt/optimizers.hpp"

namespace etaopt {

/// Flat `key = value` file. Blank lines and lines starting with '#' are
/// ignored, as is anything after " #" on a value line. Keys are dotted
/// lowercase identifiers and may appear once.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& origin = "<config>") {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view s = detail::trim(line);
      if (s.empty() || s.front() == '#') continue;
      if (const auto hash = s.find(" #"); hash != std::string_view::npos) s = detail::trim(s.substr(0, hash));
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
      }
      const std::string key(detail::trim(s.substr(0, eq)));
      const std::string value(detail::trim(s.substr(eq + 1)));
      const bool ok = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
      });
      if (!ok) throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad key '" + key + "'");
      if (cfg.values_.count(key)) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    ConfigFile cfg = parse(in, path.string());
    cfg.base_dir_ = path.parent_path();
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string str(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    if (fallback) return *fallback;
    throw ConfigError(origin_ + ": missing required key '" + key + "'");
  }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key) && fallback) return used_.insert(key), *fallback;
    const std::string v = str(key);
    const auto parsed = detail::parse_real(v);
    if (!parsed) throw ConfigError(origin_ + ": key '" + key + "' is not a real: '" + v + "'");
    return *parsed;
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const {
    if (!has(key) && fallback) return used_.insert(key), *fallback;
    const std::string v = str(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError(origin_ + ": key '" + key + "' is not a non-negative integer: '" + v + "'");
    }
    return out;
  }

  bool flag(const std::string& key, std::optional<bool> fallback = std::nullopt) const {
    if (!has(key) && fallback) return used_.insert(key), *fallback;
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + v + "'");
  }

  std::vector<std::size_t> count_list(const std::string& key) const {
    std::vector<std::size_t> out;
    const std::string v = str(key);
    for (auto cell : detail::split_commas(v)) {
      std::size_t x = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ConfigError(origin_ + ": key '" + key + "' must be a comma list of integers");
      }
      out.push_back(x);
    }
    return out;
  }

  /// Resolves a path value against the config file's directory.
  std::filesystem::path path(const std::string& key) const {
    std::filesystem::path p = str(key);
    return p.is_absolute() ? p : base_dir_ / p;
  }

  /// Keys present in the file but never read.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.push_back(k);
    }
    return out;
  }

  const std::string& origin() const noexcept { return origin_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string origin_;
  std::filesystem::path base_dir_;
};

enum class DatasetKind { csv, idx, synthetic_regression, synthetic_classification };
enum class ModelKind { linreg, logreg, mlp };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::csv;
  std::filesystem::path csv_path;
  std::string csv_target;
  bool csv_header = true;
  std::filesystem::path idx_images;
  std::filesystem::path idx_labels;
  std::size_t synth_n = 0;
  std::size_t synth_d = 0;
  double synth_noise_std = 0.0;
  std::size_t synth_classes = 2;
  double synth_separation = 1.0;
  std::uint64_t synth_seed = 0;
  bool normalize = false;
};

struct ModelConfig {
  ModelKind kind = ModelKind::linreg;
  std::vector<std::size_t> hidden;
  Reduction reduction = Reduction::sum;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string run_id = "run";
  std::uint64_t run_seed = 0;
  std::filesystem::path output_dir = "out";
  bool record_wall_time = true;
  DatasetConfig dataset;
  SplitSpec split;
  ModelConfig model;
  StrategySpec strategy;
  HyperParams hyper;
  /// 0 means full batch: one iteration per epoch.
  std::size_t batch_size = 0;
  std::size_t val_batch_size = 0;
  std::size_t epochs = 1;
  std::size_t log_every = 10;

  bool full_batch() const noexcept { return batch_size == 0; }

  /// Structural checks plus existence of referenced files.
  void validate() const {
    hyper.validate();
    if (epochs == 0) throw ConfigError("train.epochs must be >= 1");
    if (log_every == 0) throw ConfigError("train.log_every must be >= 1");
    if (split.train_count == 0) throw ConfigError("split.train must be >= 1");
    if (strategy.kind == Strategy::second_order_valprobe && split.val_count == 0) {
      throw ConfigError("strategy second_order_valprobe needs split.val > 0");
    }
    if (strategy.kind == Strategy::first_order && !(hyper.alpha_meta > 0.0)) {
      throw ConfigError("strategy first_order needs hyper.alpha_meta > 0");
    }
    auto require_file = [](const std::filesystem::path& p, const char* key) {
      if (!std::filesystem::exists(p)) {
        throw ConfigError(std::string(key) + " refers to missing file " + p.string());
      }
    };
    switch (dataset.kind) {
      case DatasetKind::csv: require_file(dataset.csv_path, "dataset.path"); break;
      case DatasetKind::idx:
        require_file(dataset.idx_images, "dataset.images");
        require_file(dataset.idx_labels, "dataset.labels");
        break;
      case DatasetKind::synthetic_regression:
      case DatasetKind::synthetic_classification:
        if (dataset.synth_n == 0 || dataset.synth_d == 0) {
          throw ConfigError("synthetic datasets need dataset.n and dataset.d >= 1");
        }
        break;
    }
    const bool regression_data = dataset.kind == DatasetKind::csv ||
                                 dataset.kind == DatasetKind::synthetic_regression;
    if (regression_data && model.kind != ModelKind::linreg) {
      throw ConfigError("regression datasets need model.kind = linreg");
    }
    if (!regression_data && model.kind == ModelKind::linreg) {
      throw ConfigError("classification datasets need model.kind = logreg or mlp");
    }
  }

  static ExperimentConfig from(const ConfigFile& f, const std::string& default_id = "run") {
    ExperimentConfig c;
    c.run_id = f.str("run.id", default_id);
    c.run_seed = f.count("run.seed", 0);
    c.output_dir = f.str("run.output_dir", "out");
    c.record_wall_time = f.flag("run.record_wall_time", true);

    const std::string kind = f.str("dataset.kind");
    if (kind == "csv") {
      c.dataset.kind = DatasetKind::csv;
      c.dataset.csv_path = f.path("dataset.path");
      c.dataset.csv_target = f.str("dataset.target");
      c.dataset.csv_header = f.flag("dataset.header", true);
      c.dataset.normalize = f.flag("dataset.normalize", true);
    } else if (kind == "idx") {
      c.dataset.kind = DatasetKind::idx;
      c.dataset.idx_images = f.path("dataset.images");
      c.dataset.idx_labels = f.path("dataset.labels");
      c.dataset.normalize = f.flag("dataset.normalize", false);
    } else if (kind == "synthetic_regression" || kind == "synthetic_classification") {
      const bool reg = kind == "synthetic_regression";
      c.dataset.kind = reg ? DatasetKind::synthetic_regression : DatasetKind::synthetic_classification;
      c.dataset.synth_n = f.count("dataset.n");
      c.dataset.synth_d = f.count("dataset.d");
      c.dataset.synth_seed = f.count("dataset.seed", 0);
      if (reg) {
        c.dataset.synth_noise_std = f.real("dataset.noise_std", 0.0);
      } else {
        c.dataset.synth_classes = f.count("dataset.classes");
        c.dataset.synth_separation = f.real("dataset.separation");
      }
      c.dataset.normalize = f.flag("dataset.normalize", false);
    } else {
      throw ConfigError("dataset.kind must be csv, idx, synthetic_regression or "
                        "synthetic_classification, got '" + kind + "'");
    }

    c.split.train_count = f.count("split.train");
    c.split.test_count = f.count("split.test", 0);
    c.split.val_count = f.count("split.val", 0);
    c.split.shuffle = f.flag("split.shuffle", true);
    c.split.shuffle_seed = f.count("split.seed", 0);

    const std::string model = f.str("model.kind");
    if (model == "linreg") c.model.kind = ModelKind::linreg;
    else if (model == "logreg") c.model.kind = ModelKind::logreg;
    else if (model == "mlp") c.model.kind = ModelKind::mlp;
    else throw ConfigError("model.kind must be linreg, logreg or mlp, got '" + model + "'");
    if (c.model.kind == ModelKind::mlp) c.model.hidden = f.count_list("model.hidden");
    const std::string reduction = f.str("model.reduction", "sum");
    if (reduction == "sum") c.model.reduction = Reduction::sum;
    else if (reduction == "mean") c.model.reduction = Reduction::mean;
    else throw ConfigError("model.reduction must be sum or mean, got '" + reduction + "'");
    c.model.seed = f.count("model.seed", c.run_seed);

    const std::string strategy = f.str("strategy.kind");
    const auto parsed = parse_strategy(strategy);
    if (!parsed) throw ConfigError("unknown strategy.kind '" + strategy + "'");
    c.strategy.kind = *parsed;
    const std::string backend = f.str("strategy.backend", "analytic");
    if (backend == "analytic") c.strategy.backend = HypergradBackend::analytic;
    else if (backend == "finite_diff") c.strategy.backend = HypergradBackend::finite_diff;
    else throw ConfigError("strategy.backend must be analytic or finite_diff, got '" + backend + "'");

    HyperParams& h = c.hyper;
    h.eta_init = f.real("hyper.eta_init");
    h.eps_fd = f.real("hyper.eps_fd", h.eps_fd);
    h.delta_smooth = f.real("hyper.delta_smooth", h.delta_smooth);
    h.alpha_meta = f.real("hyper.alpha_meta", h.alpha_meta);
    h.beta_eta = f.real("hyper.beta_eta", h.beta_eta);
    h.adam_beta1 = f.real("hyper.adam_beta1", h.adam_beta1);
    h.adam_beta2 = f.real("hyper.adam_beta2", h.adam_beta2);
    h.adam_eps = f.real("hyper.adam_eps", h.adam_eps);

    c.batch_size = f.count("train.batch_size", 0);
    c.val_batch_size = f.count("train.val_batch_size", c.batch_size);
    c.epochs = f.count("train.epochs", 1);
    c.log_every = f.count("train.log_every", 10);

    if (const auto unused = f.unused_keys(); !unused.empty()) {
      std::string msg = f.origin() + ": unknown or inapplicable key(s):";
      for (const auto& k : unused) msg += " " + k;
      throw ConfigError(msg);
    }
    try {
      c.validate();
    } catch (const ContractViolation& e) {
      throw ConfigError(f.origin() + ": " + e.what());
    }
    return c;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    return from(ConfigFile::load(path), path.stem().string());
  }
};

/// Every key understood by ExperimentConfig, for --help.
inline constexpr std::string_view kConfigReference = R"(Config file grammar
  One 'key = value' pair per line. Blank lines and lines starting with '#'
  are ignored; ' #' starts a trailing comment. Keys may appear once; unknown
  keys are rejected. Relative paths resolve against the config's directory.

Keys (default in brackets)
  run.id                 run identifier used in file names [config file stem]
  run.seed               seed for minibatch order and MLP init [0]
  run.output_dir         directory for <id>.metrics.csv and <id>.summary.csv,
                         relative to the working directory [out]
  run.record_wall_time   write elapsed milliseconds in wall_ms [true]
  dataset.kind           csv | idx | synthetic_regression | synthetic_classification
  dataset.path           csv: file path
  dataset.target         csv: target column name (or 0-based index without header)
  dataset.header         csv: first line is a header [true]
  dataset.images         idx: images file (magic 0x00000803)
  dataset.labels         idx: labels file (magic 0x00000801)
  dataset.n, dataset.d   synthetic: examples and input dimensions
  dataset.noise_std      synthetic_regression: target noise [0]
  dataset.classes        synthetic_classification: class count
  dataset.separation     synthetic_classification: distance between adjacent means
  dataset.seed           synthetic: generator seed [0]
  dataset.normalize      z-score features with train statistics
                         [true for csv, false otherwise]
  split.train            training examples
  split.test             test examples [0]
  split.val              validation examples [0]
  split.shuffle          permute rows before splitting; false keeps file order [true]
  split.seed             shuffle seed of the split [0]
  model.kind             linreg | logreg | mlp
  model.hidden           mlp: comma list of hidden layer widths
  model.reduction        sum | mean over the batch [sum]
  model.seed             mlp init seed [run.seed]
  strategy.kind          basic | first_order | second_order | second_order_momentum |
                         second_order_valprobe | adam
  strategy.backend       first_order hypergradient: analytic | finite_diff [analytic]
  hyper.eta_init         initial (or fixed) learning rate; Adam base rate
  hyper.eps_fd           finite-difference step on eta [1e-5]
  hyper.delta_smooth     denominator smoothing and eta floor [1e-6]
  hyper.alpha_meta       first-order meta learning rate [0]
  hyper.beta_eta         momentum on eta [0.9]
  hyper.adam_beta1       [0.9]
  hyper.adam_beta2       [0.999]
  hyper.adam_eps         [1e-8]
  train.batch_size       minibatch size, 0 = full batch [0]
  train.val_batch_size   validation-probe batch size [train.batch_size]
  train.epochs           epochs; full batch runs do one iteration per epoch [1]
  train.log_every        minibatch runs log every K-th iteration and at epoch ends [10]
)";

}  // namespace etaopt

#endif  // ETAOPT_CONFIG_HPP
