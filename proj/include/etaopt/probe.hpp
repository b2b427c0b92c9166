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

#ifndef ETAOPT_PROBE_HPP
#define ETAOPT_PROBE_HPP

#include <cmath>
#include <concepts>
#include <string>

#include "etaopt/errors.hpp"
#include "etaopt/model_api.hpp"

namespace etaopt {

/// Frozen snapshot of (w, g, batch) evaluating the one-step meta-objective
///
///     f(eta) = L(w - eta * g).
///
/// Each evaluation materializes w - eta * g in a scratch vector, so probing
/// never touches the weights being trained. The probe only borrows the
/// objective and the batch; both must outlive it.
template <Objective Obj>
class EtaProbe {
 public:
  EtaProbe(const Obj& objective, ParamVector w, ParamVector g, const Batch& batch)
      : objective_(&objective), w_(std::move(w)), g_(std::move(g)), batch_(&batch) {
    require_length(objective.param_count(), w_.size(), "probe weights");
    require_length(objective.param_count(), g_.size(), "probe direction");
  }

  /// Throws DivergedProbe when the loss is not finite.
  double eval(double eta) const {
    const double value = objective_->loss(step_along(w_, g_, eta), *batch_);
    if (!std::isfinite(value)) throw DivergedProbe(eta, value);
    return value;
  }

  double operator()(double eta) const { return eval(eta); }

  const Obj& objective() const noexcept { return *objective_; }
  const ParamVector& weights() const noexcept { return w_; }
  const ParamVector& direction() const noexcept { return g_; }
  const Batch& batch() const noexcept { return *batch_; }

 private:
  const Obj* objective_;
  ParamVector w_;
  ParamVector g_;
  const Batch* batch_;
};

template <Objective Obj>
EtaProbe<Obj> probe_make(const Obj& objective, ParamVector w, ParamVector g, const Batch& batch) {
  return EtaProbe<Obj>(objective, std::move(w), std::move(g), batch);
}

template <Objective Obj>
double probe_eval(const EtaProbe<Obj>& p, double eta) {
  return p.eval(eta);
}

/// f at eta, eta +- eps and eta +- 2 eps.
struct StencilSample {
  double center = 0.0;
  double eps = 0.0;
  double f_m2 = 0.0;
  double f_m1 = 0.0;
  double f_0 = 0.0;
  double f_p1 = 0.0;
  double f_p2 = 0.0;

  bool valid() const {
    return eps > 0.0 && std::isfinite(f_m2) && std::isfinite(f_m1) && std::isfinite(f_0) &&
           std::isfinite(f_p1) && std::isfinite(f_p2);
  }

  friend bool operator==(const StencilSample&, const StencilSample&) = default;
};

template <class F>
concept EtaFunction = std::invocable<const F&, double> &&
                      std::convertible_to<std::invoke_result_t<const F&, double>, double>;

/// Exactly five evaluations, always in the order -2eps, -eps, 0, +eps, +2eps.
template <EtaFunction F>
StencilSample stencil_collect(const F& f, double eta, double eps) {
  if (!(eps > 0.0)) throw ContractViolation("stencil eps must be positive, got " + std::to_string(eps));
  StencilSample s;
  s.center = eta;
  s.eps = eps;
  s.f_m2 = f(eta - 2.0 * eps);
  s.f_m1 = f(eta - eps);
  s.f_0 = f(eta);
  s.f_p1 = f(eta + eps);
  s.f_p2 = f(eta + 2.0 * eps);
  return s;
}

/// Central first difference (f(eta+eps) - f(eta-eps)) / 2eps.
inline double fd_first(const StencilSample& s) { return (s.f_p1 - s.f_m1) / (2.0 * s.eps); }

/// Second difference over the outer points, (f(eta+2eps) + f(eta-2eps) - 2f(eta)) / 4eps^2.
/// This is the central difference of the one-sided first derivatives at
/// eta +- eps, so those never need to be formed separately.
inline double fd_second(const StencilSample& s) {
  return (s.f_p2 + s.f_m2 - 2.0 * s.f_0) / (4.0 * s.eps * s.eps);
}

/// Hypergradient f'(eta) = -g . grad L(w - eta g), one extra gradient.
template <Objective Obj>
double analytic_fprime(const Obj& objective, const ParamVector& w, const ParamVector& g,
                       const Batch& batch, double eta) {
  require_length(w.size(), g.size(), "direction");
  const ParamVector next = gradient(objective, step_along(w, g, eta), batch);
  return -dot(g, next);
}

template <Objective Obj>
double analytic_fprime(const EtaProbe<Obj>& p, double eta) {
  return analytic_fprime(p.objective(), p.weights(), p.direction(), p.batch(), eta);
}

}  // namespace etaopt

#endif  // ETAOPT_PROBE_HPP
