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

#ifndef ETAOPT_MODEL_API_HPP
#define ETAOPT_MODEL_API_HPP

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "etaopt/errors.hpp"

namespace etaopt {

/// Flat weight vector of a model. Length is fixed by the model; entries must
/// stay finite.
using ParamVector = std::vector<double>;

/// Dense row-major matrix of reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ContractViolation("matrix data has " + std::to_string(data_.size()) +
                              " entries, expected " +
                              std::to_string(rows_ * cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A minibatch: one feature row and one target per example. Targets are
/// regression values or dense class indices stored as reals.
class Batch {
 public:
  Batch() = default;
  Batch(Matrix features, std::vector<double> targets)
      : features_(std::move(features)), targets_(std::move(targets)) {
    if (features_.rows() != targets_.size()) {
      throw ContractViolation("batch has " + std::to_string(features_.rows()) +
                              " feature rows but " +
                              std::to_string(targets_.size()) + " targets");
    }
    if (targets_.empty()) throw ContractViolation("batch must hold at least one example");
  }

  std::size_t size() const noexcept { return targets_.size(); }
  std::size_t input_dim() const noexcept { return features_.cols(); }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<double>& targets() const noexcept { return targets_; }

  friend bool operator==(const Batch&, const Batch&) = default;

 private:
  Matrix features_;
  std::vector<double> targets_;
};

enum class LossKind { square, cross_entropy };

/// How per-example losses are combined over a batch.
enum class Reduction { sum, mean };

inline std::string_view to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean"; }

inline double reduce(double total, std::size_t count, Reduction r) {
  return r == Reduction::sum ? total : total / static_cast<double>(count);
}

/// A differentiable objective L(w; batch) with gradient g = dL/dw.
template <class T>
concept Objective = requires(const T& o, const ParamVector& w, const Batch& b) {
  { o.param_count() } -> std::convertible_to<std::size_t>;
  { o.loss(w, b) } -> std::convertible_to<double>;
  { o.gradient(w, b) } -> std::convertible_to<ParamVector>;
};

/// Objectives with ReLU-style kinks report the smallest |pre-activation| so
/// finite-difference checks can steer clear of them.
template <class T>
concept KinkAware = Objective<T> && requires(const T& o, const ParamVector& w, const Batch& b) {
  { o.kink_margin(w, b) } -> std::convertible_to<double>;
};

inline void require_length(std::size_t expected, std::size_t actual, std::string_view what) {
  if (expected != actual) {
    throw ContractViolation(std::string(what) + ": expected length " +
                            std::to_string(expected) + ", got " +
                            std::to_string(actual));
  }
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template <Objective Obj>
double loss(const Obj& objective, const ParamVector& w, const Batch& batch) {
  require_length(objective.param_count(), w.size(), "weights");
  return objective.loss(w, batch);
}

template <Objective Obj>
ParamVector gradient(const Obj& objective, const ParamVector& w, const Batch& batch) {
  require_length(objective.param_count(), w.size(), "weights");
  ParamVector g = objective.gradient(w, batch);
  require_length(objective.param_count(), g.size(), "gradient");
  return g;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_length(a.size(), b.size(), "dot operand");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// w - eta * g into a fresh vector.
inline ParamVector step_along(std::span<const double> w, std::span<const double> g, double eta) {
  require_length(w.size(), g.size(), "direction");
  ParamVector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] - eta * g[i];
  return out;
}

/// lambda * L, with gradient lambda * dL/dw.
template <Objective Inner>
class ScaledObjective {
 public:
  ScaledObjective(const Inner& inner, double scale) : inner_(&inner), scale_(scale) {}

  std::size_t param_count() const { return inner_->param_count(); }
  double loss(const ParamVector& w, const Batch& b) const { return scale_ * inner_->loss(w, b); }
  ParamVector gradient(const ParamVector& w, const Batch& b) const {
    ParamVector g = inner_->gradient(w, b);
    for (double& x : g) x *= scale_;
    return g;
  }

 private:
  const Inner* inner_;
  double scale_;
};

}  // namespace etaopt

#endif  // ETAOPT_MODEL_API_HPP
