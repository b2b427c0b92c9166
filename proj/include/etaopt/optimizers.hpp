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

#ifndef ETAOPT_OPTIMIZERS_HPP
#define ETAOPT_OPTIMIZERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "etaopt/errors.hpp"
#include "etaopt/model_api.hpp"
#include "etaopt/probe.hpp"

namespace etaopt {

struct HyperParams {
  double eta_init = 1e-2;
  double eps_fd = 1e-5;
  double delta_smooth = 1e-6;
  double alpha_meta = 0.0;
  double beta_eta = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    auto fail = [](const std::string& msg) { throw ContractViolation("hyperparameter " + msg); };
    if (!(eta_init > 0.0) || !std::isfinite(eta_init)) fail("eta_init must be > 0");
    if (!(eps_fd > 0.0) || !std::isfinite(eps_fd)) fail("eps_fd must be > 0");
    if (!(delta_smooth > 0.0) || !std::isfinite(delta_smooth)) fail("delta_smooth must be > 0");
    if (!(alpha_meta >= 0.0) || !std::isfinite(alpha_meta)) fail("alpha_meta must be >= 0");
    if (!(beta_eta >= 0.0 && beta_eta < 1.0)) fail("beta_eta must be in [0, 1)");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must be in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must be in [0, 1)");
    if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  }
};

struct OptimizerState {
  ParamVector w;
  double eta = 0.0;
  std::size_t t = 0;
  double eta_momentum = 0.0;
  ParamVector adam_m;
  ParamVector adam_v;
  std::optional<StencilSample> last_stencil;
  HyperParams hyper;

  static OptimizerState start(ParamVector w0, const HyperParams& hyper) {
    hyper.validate();
    if (!all_finite(w0)) throw ContractViolation("initial weights must be finite");
    OptimizerState s;
    s.adam_m.assign(w0.size(), 0.0);
    s.adam_v.assign(w0.size(), 0.0);
    s.w = std::move(w0);
    s.eta = hyper.eta_init;
    s.hyper = hyper;
    return s;
  }
};

struct StepReport {
  /// Loss at the committed weights, f(eta) evaluated before the commit.
  /// Only strategies that probe f(eta) itself know it for free.
  std::optional<double> pre_loss;
  double eta_before = 0.0;
  double eta_after = 0.0;
  /// Increment to eta before the positivity clamp.
  double delta_eta_raw = 0.0;
  /// Extra loss or gradient evaluations beyond the one training gradient.
  std::size_t probe_count = 0;
};

inline double clamp_eta(double eta, double delta) {
  if (!(delta > 0.0)) throw ContractViolation("clamp delta must be positive");
  return std::max(eta, delta);
}

/// Newton increment on eta from a five-point stencil:
///
///     -2 eps (f(eta+eps) - f(eta-eps)) / (f(eta+2eps) + f(eta-2eps) - 2 f(eta))
///
/// A denominator with |D| < delta is pushed away from zero by delta, keeping
/// its sign (+delta when D == 0).
inline double second_order_delta(const StencilSample& s, double delta) {
  double denom = s.f_p2 + s.f_m2 - 2.0 * s.f_0;
  if (std::abs(denom) < delta) denom += denom < 0.0 ? -delta : delta;
  return -(2.0 * s.eps * (s.f_p1 - s.f_m1) / denom);
}

enum class HypergradBackend { analytic, finite_diff };

namespace detail {

inline ParamVector checked_gradient_of(const auto& objective, const ParamVector& w,
                                       const Batch& batch) {
  ParamVector g = gradient(objective, w, batch);
  if (!all_finite(g)) throw DivergenceError("non-finite gradient at step");
  return g;
}

inline void commit(OptimizerState& state, const ParamVector& g, double eta) {
  for (std::size_t i = 0; i < state.w.size(); ++i) state.w[i] -= eta * g[i];
  if (!all_finite(state.w)) {
    throw DivergenceError("non-finite weights after step " + std::to_string(state.t + 1));
  }
}

inline void require_finite_eta(double eta) {
  if (!std::isfinite(eta)) throw DivergenceError("learning rate became non-finite");
}

}  // namespace detail

/// Fixed learning rate SGD: w <- w - eta g.
template <Objective Obj>
StepReport step_basic(OptimizerState& state, const Obj& objective, const Batch& batch) {
  const ParamVector g = detail::checked_gradient_of(objective, state.w, batch);
  StepReport r;
  r.eta_before = r.eta_after = state.eta;
  detail::commit(state, g, state.eta);
  ++state.t;
  return r;
}

/// First-order update along a given direction. The weights move first, then
/// eta <- max(eta - alpha f'(eta), delta).
template <Objective Obj>
StepReport step_first_order_along(OptimizerState& state, const Obj& objective,
                                  const Batch& batch, const ParamVector& g,
                                  HypergradBackend backend) {
  const HyperParams& h = state.hyper;
  if (!(h.alpha_meta > 0.0)) throw ContractViolation("first-order step needs alpha_meta > 0");
  require_length(state.w.size(), g.size(), "direction");

  StepReport r;
  r.eta_before = state.eta;
  double fprime = 0.0;
  if (backend == HypergradBackend::finite_diff) {
    const auto probe = probe_make(objective, state.w, g, batch);
    StencilSample s;
    s.center = state.eta;
    s.eps = h.eps_fd;
    s.f_m2 = s.f_0 = s.f_p2 = std::numeric_limits<double>::quiet_NaN();
    s.f_m1 = probe.eval(state.eta - h.eps_fd);
    s.f_p1 = probe.eval(state.eta + h.eps_fd);
    fprime = fd_first(s);
    r.probe_count = 2;
    detail::commit(state, g, state.eta);
  } else {
    detail::commit(state, g, state.eta);
    // f'(eta(t)) = -g(t) . g(t+1), with g(t+1) taken at the committed weights.
    const ParamVector next = detail::checked_gradient_of(objective, state.w, batch);
    fprime = -dot(g, next);
    r.probe_count = 1;
  }
  r.delta_eta_raw = -h.alpha_meta * fprime;
  state.eta = clamp_eta(state.eta + r.delta_eta_raw, h.delta_smooth);
  detail::require_finite_eta(state.eta);
  r.eta_after = state.eta;
  ++state.t;
  return r;
}

template <Objective Obj>
StepReport step_first_order(OptimizerState& state, const Obj& objective, const Batch& batch,
                            HypergradBackend backend = HypergradBackend::analytic) {
  const ParamVector g = detail::checked_gradient_of(objective, state.w, batch);
  return step_first_order_along(state, objective, batch, g, backend);
}

/// Second-order update with the stencil probing `probe_batch` along `g`.
///
/// Order of operations: collect the five losses at (w(t), g(t), eta(t)),
/// commit w(t+1) = w(t) - eta(t) g(t), then apply the Newton increment and
/// clamp. The commit never depends on the stencil values.
template <Objective Obj>
StepReport step_second_order_along(OptimizerState& state, const Obj& objective,
                                   const Batch& probe_batch, const ParamVector& g) {
  const HyperParams& h = state.hyper;
  require_length(state.w.size(), g.size(), "direction");
  const auto probe = probe_make(objective, state.w, g, probe_batch);
  const StencilSample s = stencil_collect(probe, state.eta, h.eps_fd);

  StepReport r;
  r.eta_before = state.eta;
  r.probe_count = 5;
  r.pre_loss = s.f_0;
  detail::commit(state, g, state.eta);

  r.delta_eta_raw = second_order_delta(s, h.delta_smooth);
  state.eta = clamp_eta(state.eta + r.delta_eta_raw, h.delta_smooth);
  detail::require_finite_eta(state.eta);
  r.eta_after = state.eta;
  state.last_stencil = s;
  ++state.t;
  return r;
}

template <Objective Obj>
StepReport step_second_order(OptimizerState& state, const Obj& objective, const Batch& batch) {
  const ParamVector g = detail::checked_gradient_of(objective, state.w, batch);
  return step_second_order_along(state, objective, batch, g);
}

/// Second-order step with momentum on eta:
/// m <- beta m + newton, eta <- max(eta + m, delta).
template <Objective Obj>
StepReport step_second_order_momentum(OptimizerState& state, const Obj& objective,
                                      const Batch& batch) {
  const ParamVector g = detail::checked_gradient_of(objective, state.w, batch);
  const HyperParams& h = state.hyper;
  const StencilSample s = stencil_collect(probe_make(objective, state.w, g, batch), state.eta,
                                          h.eps_fd);
  StepReport r;
  r.eta_before = state.eta;
  r.probe_count = 5;
  r.pre_loss = s.f_0;
  detail::commit(state, g, state.eta);
  state.eta_momentum = h.beta_eta * state.eta_momentum + second_order_delta(s, h.delta_smooth);
  r.delta_eta_raw = state.eta_momentum;
  state.eta = clamp_eta(state.eta + state.eta_momentum, h.delta_smooth);
  detail::require_finite_eta(state.eta);
  r.eta_after = state.eta;
  state.last_stencil = s;
  ++state.t;
  return r;
}

/// Gradient from the training batch, stencil losses from the validation batch.
template <Objective Obj>
StepReport step_second_order_valprobe(OptimizerState& state, const Obj& objective,
                                      const Batch& train_batch, const Batch& val_batch) {
  const ParamVector g = detail::checked_gradient_of(objective, state.w, train_batch);
  return step_second_order_along(state, objective, val_batch, g);
}

/// Bias-corrected Adam at the fixed base rate hyper.eta_init.
template <Objective Obj>
StepReport step_adam(OptimizerState& state, const Obj& objective, const Batch& batch) {
  const HyperParams& h = state.hyper;
  require_length(state.w.size(), state.adam_m.size(), "adam first moment");
  require_length(state.w.size(), state.adam_v.size(), "adam second moment");
  const ParamVector g = detail::checked_gradient_of(objective, state.w, batch);

  const double step = static_cast<double>(state.t + 1);
  const double c1 = 1.0 - std::pow(h.adam_beta1, step);
  const double c2 = 1.0 - std::pow(h.adam_beta2, step);
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.adam_m[i] = h.adam_beta1 * state.adam_m[i] + (1.0 - h.adam_beta1) * g[i];
    state.adam_v[i] = h.adam_beta2 * state.adam_v[i] + (1.0 - h.adam_beta2) * g[i] * g[i];
    const double m_hat = state.adam_m[i] / c1;
    const double v_hat = state.adam_v[i] / c2;
    state.w[i] -= h.eta_init * m_hat / (std::sqrt(v_hat) + h.adam_eps);
  }
  if (!all_finite(state.w)) {
    throw DivergenceError("non-finite weights after adam step " + std::to_string(state.t + 1));
  }
  state.eta = h.eta_init;
  StepReport r;
  r.eta_before = r.eta_after = h.eta_init;
  ++state.t;
  return r;
}

enum class Strategy {
  basic,
  first_order,
  second_order,
  second_order_momentum,
  second_order_valprobe,
  adam,
};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::basic: return "basic";
    case Strategy::first_order: return "first_order";
    case Strategy::second_order: return "second_order";
    case Strategy::second_order_momentum: return "second_order_momentum";
    case Strategy::second_order_valprobe: return "second_order_valprobe";
    case Strategy::adam: return "adam";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  for (Strategy k : {Strategy::basic, Strategy::first_order, Strategy::second_order,
                     Strategy::second_order_momentum, Strategy::second_order_valprobe,
                     Strategy::adam}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline bool is_adaptive(Strategy s) { return s != Strategy::basic && s != Strategy::adam; }

struct StrategySpec {
  Strategy kind = Strategy::second_order;
  HypergradBackend backend = HypergradBackend::analytic;
};

/// Dispatches one step; `val_batch` is required by the validation-probe variant only.
template <Objective Obj>
StepReport step(OptimizerState& state, const StrategySpec& spec, const Obj& objective,
                const Batch& batch, const Batch* val_batch = nullptr) {
  switch (spec.kind) {
    case Strategy::basic: return step_basic(state, objective, batch);
    case Strategy::first_order: return step_first_order(state, objective, batch, spec.backend);
    case Strategy::second_order: return step_second_order(state, objective, batch);
    case Strategy::second_order_momentum:
      return step_second_order_momentum(state, objective, batch);
    case Strategy::second_order_valprobe:
      if (!val_batch) throw ContractViolation("validation-probe step needs a validation batch");
      return step_second_order_valprobe(state, objective, batch, *val_batch);
    case Strategy::adam: return step_adam(state, objective, batch);
  }
  throw ContractViolation("unknown strategy");
}

}  // namespace etaopt

#endif  // ETAOPT_OPTIMIZERS_HPP
