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

// Command-line front end: run experiments, compare runs, and run the
// gradient-check and line-search oracles on a configured model.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "etaopt/etaopt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

int cmd_run(const std::string& config_path, const std::string& out_override) {
  etaopt::ExperimentConfig cfg = etaopt::ExperimentConfig::load(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const etaopt::RunResult r = etaopt::run_experiment(cfg);
  std::cout << r.metrics_path.string() << '\n';
  if (r.status == etaopt::RunStatus::diverged) {
    std::cerr << "run " << cfg.run_id << " diverged after " << r.iterations
              << " iterations: " << r.message << '\n';
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out_dir, bool charts) {
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  const etaopt::CompareResult r = etaopt::compare_runs(paths, out_dir, charts);
  std::cout << r.long_csv.string() << '\n';
  for (const auto& c : r.charts) std::cout << c.string() << '\n';
  return kExitOk;
}

/// First training batch of the configured run.
etaopt::Batch first_batch(const etaopt::Splits& data, std::size_t rows) {
  std::vector<std::size_t> idx;
  const std::size_t n = std::min(rows, data.train.size());
  for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
  return data.train.subset(idx).to_batch();
}

int cmd_gradcheck(const std::string& config_path, double h, std::size_t rows, std::uint64_t seed,
                  double scale, double tol) {
  const auto cfg = etaopt::ExperimentConfig::load(config_path);
  const auto data = etaopt::prepare_data(cfg);
  const auto model = etaopt::build_model(cfg.model, data.train);
  const etaopt::Batch batch = first_batch(data, rows);
  return std::visit(
      [&](const auto& m) {
        etaopt::ParamVector w = etaopt::initial_weights_of(m);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, scale);
        for (double& x : w) x += noise(rng);
        etaopt::GradCheckOptions opts;
        opts.seed = seed;
        const auto rep = etaopt::gradcheck(m, w, batch, h, opts);
        std::printf("params %zu  rows %zu  h %g\nmax_rel_error %.3e at coordinate %zu (resamples %zu)\n",
                    w.size(), batch.size(), rep.h_used, rep.max_rel_error, rep.worst_coordinate,
                    rep.resamples);
        const bool ok = rep.max_rel_error <= tol;
        std::printf("%s (tolerance %g)\n", ok ? "PASS" : "FAIL", tol);
        return ok ? kExitOk : kExitCheckFailed;
      },
      model);
}

int cmd_linesearch(const std::string& config_path, double lo, double hi, std::size_t points) {
  const auto cfg = etaopt::ExperimentConfig::load(config_path);
  const auto data = etaopt::prepare_data(cfg);
  const auto model = etaopt::build_model(cfg.model, data.train);
  const etaopt::Batch batch =
      first_batch(data, cfg.full_batch() ? data.train.size() : cfg.batch_size);
  return std::visit(
      [&](const auto& m) {
        const etaopt::ParamVector w = etaopt::initial_weights_of(m);
        const auto probe = etaopt::probe_make(m, w, etaopt::gradient(m, w, batch), batch);
        const auto res = etaopt::line_search_oracle(probe, lo, hi, points);
        const auto s = etaopt::stencil_collect(probe, cfg.hyper.eta_init, cfg.hyper.eps_fd);
        const double newton = cfg.hyper.eta_init + etaopt::second_order_delta(s, cfg.hyper.delta_smooth);
        std::printf("grid [%g, %g] x %zu\neta_star %.17g\nf_star %.17g\n", res.lo, res.hi,
                    res.points, res.eta_star, res.f_star);
        std::printf("newton from eta_init %g: %.17g (f %.17g)\n", cfg.hyper.eta_init, newton,
                    probe.eval(newton));
        return kExitOk;
      },
      model);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-rate adaptive SGD experiments"};
  app.require_subcommand(1);
  app.footer(std::string(etaopt::kConfigReference) +
             "\nExit status: 0 success, 1 check failed, 2 usage or config error, 3 divergence\n");

  std::string config, out_dir;
  auto* run = app.add_subcommand("run", "train one configured experiment");
  run->add_option("--config", config, "experiment config file")->required();
  run->add_option("--out", out_dir, "override run.output_dir");

  std::vector<std::string> files;
  std::string compare_out = "compare";
  bool no_charts = false;
  auto* cmp = app.add_subcommand("compare", "align metrics files and draw charts");
  cmp->add_option("files", files, "metrics CSV files (at least 2)")->required();
  cmp->add_option("--out", compare_out, "output directory");
  cmp->add_flag("--no-charts", no_charts, "skip SVG output");

  double h = 1e-6, scale = 0.1, tol = 1e-4;
  std::size_t rows = 32;
  std::uint64_t seed = 0;
  auto* gc = app.add_subcommand("gradcheck", "central-difference check of the configured model");
  gc->add_option("--config", config, "experiment config file")->required();
  gc->add_option("--step", h, "finite-difference step h");
  gc->add_option("--rows", rows, "training rows in the checked batch");
  gc->add_option("--seed", seed, "seed of the random weight perturbation");
  gc->add_option("--scale", scale, "std of the random weight perturbation");
  gc->add_option("--tol", tol, "maximum accepted relative error");

  double lo = 0.0, hi = 1.0;
  std::size_t points = 101;
  auto* ls = app.add_subcommand("linesearch", "dense line search of f(eta) at the initial weights");
  ls->add_option("--config", config, "experiment config file")->required();
  ls->add_option("--lo", lo, "grid start")->required();
  ls->add_option("--hi", hi, "grid end")->required();
  ls->add_option("--points", points, "grid points")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, out_dir);
    if (*cmp) return cmd_compare(files, compare_out, !no_charts);
    if (*gc) return cmd_gradcheck(config, h, rows, seed, scale, tol);
    if (*ls) return cmd_linesearch(config, lo, hi, points);
  } catch (const etaopt::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const etaopt::DivergedProbe& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
