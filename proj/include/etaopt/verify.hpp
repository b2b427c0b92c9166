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

#ifndef ETAOPT_VERIFY_HPP
#define ETAOPT_VERIFY_HPP

// Independent referees for the models and the learning-rate updates. Nothing
// in here may depend on optimizers.hpp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "etaopt/errors.hpp"
#include "etaopt/model_api.hpp"
#include "etaopt/probe.hpp"

namespace etaopt {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_coordinate = 0;
  double h_used = 0.0;
  /// Times the point was nudged away from a ReLU kink.
  std::size_t resamples = 0;
  /// Point the check actually ran at.
  ParamVector point;
};

struct GradCheckOptions {
  /// Minimum |pre-activation| required for kink-aware objectives.
  double kink_guard = 1e-4;
  double resample_scale = 1e-2;
  std::size_t max_resamples = 100;
  std::uint64_t seed = 0;
};

/// Compares every gradient coordinate with the central difference
/// (L(w + h e_i) - L(w - h e_i)) / 2h. Errors are relative to
/// max(1, |analytic|).
template <Objective Obj>
GradCheckReport gradcheck(const Obj& objective, ParamVector w, const Batch& batch, double h,
                          const GradCheckOptions& opts = {}) {
  if (!(h > 0.0)) throw ContractViolation("gradcheck step h must be positive");
  require_length(objective.param_count(), w.size(), "gradcheck weights");

  GradCheckReport report;
  report.h_used = h;
  if constexpr (KinkAware<Obj>) {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> nudge(0.0, opts.resample_scale);
    while (objective.kink_margin(w, batch) < opts.kink_guard) {
      if (report.resamples == opts.max_resamples) {
        throw ContractViolation("gradcheck could not move away from a ReLU kink");
      }
      for (double& x : w) x += nudge(rng);
      ++report.resamples;
    }
  }

  const ParamVector analytic = gradient(objective, w, batch);
  for (std::size_t i = 0; i < w.size(); ++i) {
    ParamVector probe = w;
    probe[i] = w[i] + h;
    const double up = objective.loss(probe, batch);
    probe[i] = w[i] - h;
    const double down = objective.loss(probe, batch);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw DivergenceError("gradcheck: non-finite loss probing coordinate " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    if (err > report.max_rel_error || i == 0) {
      report.max_rel_error = err;
      report.worst_coordinate = i;
    }
  }
  report.point = std::move(w);
  return report;
}

struct LineSearchResult {
  double eta_star = 0.0;
  double f_star = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 0;
};

/// Brute-force minimizer of f over [lo, hi]: a uniform grid (ties go to the
/// smallest eta), then golden-section refinement inside the neighbouring
/// cells of the winner. Grid points where f diverges are skipped.
template <EtaFunction F>
LineSearchResult line_search_oracle(const F& f, double lo, double hi, std::size_t points) {
  if (!(lo < hi)) throw ContractViolation("line search needs lo < hi");
  if (points < 3) throw ContractViolation("line search needs at least 3 grid points");

  auto safe = [&](double eta) {
    try {
      const double v = f(eta);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const DivergedProbe&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double step = (hi - lo) / static_cast<double>(points - 1);
  auto grid = [&](std::size_t k) { return k + 1 == points ? hi : lo + step * static_cast<double>(k); };

  std::size_t best = points;
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points; ++k) {
    const double v = safe(grid(k));
    if (v < best_f) {
      best_f = v;
      best = k;
    }
  }
  if (best == points) throw DivergedProbe(lo, std::numeric_limits<double>::infinity());

  LineSearchResult r{grid(best), best_f, lo, hi, points};

  double a = grid(best == 0 ? 0 : best - 1);
  double b = grid(best + 1 == points ? best : best + 1);
  constexpr double kInvPhi = 0.61803398874989484820;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = safe(c), fd = safe(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = safe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = safe(d);
    }
  }
  const double refined = fc <= fd ? c : d;
  const double refined_f = std::min(fc, fd);
  if (refined_f < r.f_star) {
    r.eta_star = refined;
    r.f_star = refined_f;
  }
  return r;
}

}  // namespace etaopt

#endif  // ETAOPT_VERIFY_HPP
