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

#ifndef ETAOPT_MODELS_HPP
#define ETAOPT_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "etaopt/errors.hpp"
#include "etaopt/model_api.hpp"

namespace etaopt {

namespace detail {

inline void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw ContractViolation(std::string(what) + " must be positive");
}

inline void require_input_dim(const Batch& b, std::size_t expected) {
  if (b.input_dim() != expected) {
    throw ContractViolation("batch has " + std::to_string(b.input_dim()) +
                            " feature columns, model expects " + std::to_string(expected));
  }
}

inline std::size_t class_index(double target, std::size_t classes) {
  if (!(target >= 0.0) || target != std::floor(target) ||
      target >= static_cast<double>(classes)) {
    throw ContractViolation("class target " + std::to_string(target) + " outside [0, " +
                            std::to_string(classes) + ")");
  }
  return static_cast<std::size_t>(target);
}

/// Softmax cross-entropy of one logit row; writes softmax probabilities into
/// probs when non-null. Uses the max-subtracted log-sum-exp.
inline double softmax_xent(std::span<const double> logits, std::size_t label, double* probs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  if (probs) {
    for (std::size_t c = 0; c < logits.size(); ++c) probs[c] = std::exp(logits[c] - lse);
  }
  return lse - logits[label];
}

}  // namespace detail

/// L(w) = 1/2 w'Aw - b'w + c, independent of the batch. A must be symmetric.
class QuadraticObjective {
 public:
  QuadraticObjective(Matrix a, std::vector<double> b, double c = 0.0)
      : a_(std::move(a)), b_(std::move(b)), c_(c) {
    if (a_.rows() != a_.cols()) throw ContractViolation("quadratic form must be square");
    require_length(a_.rows(), b_.size(), "linear term");
  }

  /// 1/2 * scale * |w|^2 in n dimensions.
  static QuadraticObjective isotropic(std::size_t n, double scale = 1.0) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = scale;
    return {std::move(a), std::vector<double>(n, 0.0)};
  }

  std::size_t param_count() const { return b_.size(); }

  double loss(const ParamVector& w, const Batch&) const {
    const std::size_t n = param_count();
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double aw = 0.0;
      for (std::size_t j = 0; j < n; ++j) aw += a_(i, j) * w[j];
      quad += w[i] * aw;
    }
    return 0.5 * quad - dot(b_, w) + c_;
  }

  ParamVector gradient(const ParamVector& w, const Batch&) const {
    const std::size_t n = param_count();
    ParamVector g(n);
    for (std::size_t i = 0; i < n; ++i) {
      double aw = 0.0;
      for (std::size_t j = 0; j < n; ++j) aw += a_(i, j) * w[j];
      g[i] = aw - b_[i];
    }
    return g;
  }

  const Matrix& hessian() const noexcept { return a_; }
  const std::vector<double>& linear() const noexcept { return b_; }

 private:
  Matrix a_;
  std::vector<double> b_;
  double c_;
};

/// Least squares ||[X 1] w - y||^2 with the bias stored as the last weight.
class LinearRegressionModel {
 public:
  explicit LinearRegressionModel(std::size_t input_dim, Reduction reduction = Reduction::sum)
      : input_dim_(input_dim), reduction_(reduction) {
    detail::require_positive(input_dim, "input_dim");
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t param_count() const noexcept { return input_dim_ + 1; }
  Reduction reduction() const noexcept { return reduction_; }
  ParamVector initial_weights() const { return ParamVector(param_count(), 0.0); }

  double predict(const ParamVector& w, std::span<const double> x) const {
    double y = 0.0;
    for (std::size_t j = 0; j < input_dim_; ++j) y += x[j] * w[j];
    return y + w[input_dim_];
  }

  double loss(const ParamVector& w, const Batch& b) const {
    detail::require_input_dim(b, input_dim_);
    double total = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double r = predict(w, b.features().row(i)) - b.targets()[i];
      total += r * r;
    }
    return reduce(total, b.size(), reduction_);
  }

  ParamVector gradient(const ParamVector& w, const Batch& b) const {
    detail::require_input_dim(b, input_dim_);
    ParamVector g(param_count(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto x = b.features().row(i);
      const double r2 = 2.0 * (predict(w, x) - b.targets()[i]);
      for (std::size_t j = 0; j < input_dim_; ++j) g[j] += r2 * x[j];
      g[input_dim_] += r2;
    }
    if (reduction_ == Reduction::mean) {
      for (double& x : g) x /= static_cast<double>(b.size());
    }
    return g;
  }

 private:
  std::size_t input_dim_;
  Reduction reduction_;
};

/// Multinomial logistic regression. Weights form a (input_dim + 1) x C
/// row-major matrix whose last row is the bias.
class LogisticRegressionModel {
 public:
  LogisticRegressionModel(std::size_t input_dim, std::size_t class_count,
                          Reduction reduction = Reduction::sum)
      : input_dim_(input_dim), classes_(class_count), reduction_(reduction) {
    detail::require_positive(input_dim, "input_dim");
    if (class_count < 2) throw ContractViolation("class_count must be at least 2");
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t class_count() const noexcept { return classes_; }
  std::size_t param_count() const noexcept { return (input_dim_ + 1) * classes_; }
  Reduction reduction() const noexcept { return reduction_; }
  ParamVector initial_weights() const { return ParamVector(param_count(), 0.0); }

  void logits(const ParamVector& w, std::span<const double> x, double* out) const {
    const double* bias = w.data() + input_dim_ * classes_;
    std::copy(bias, bias + classes_, out);
    for (std::size_t j = 0; j < input_dim_; ++j) {
      const double xj = x[j];
      const double* wr = w.data() + j * classes_;
      for (std::size_t c = 0; c < classes_; ++c) out[c] += xj * wr[c];
    }
  }

  double loss(const ParamVector& w, const Batch& b) const {
    detail::require_input_dim(b, input_dim_);
    std::vector<double> z(classes_);
    double total = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      logits(w, b.features().row(i), z.data());
      total += detail::softmax_xent(z, detail::class_index(b.targets()[i], classes_), nullptr);
    }
    return reduce(total, b.size(), reduction_);
  }

  ParamVector gradient(const ParamVector& w, const Batch& b) const {
    detail::require_input_dim(b, input_dim_);
    ParamVector g(param_count(), 0.0);
    std::vector<double> z(classes_), p(classes_);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto x = b.features().row(i);
      logits(w, x, z.data());
      detail::softmax_xent(z, detail::class_index(b.targets()[i], classes_), p.data());
      p[static_cast<std::size_t>(b.targets()[i])] -= 1.0;
      for (std::size_t j = 0; j < input_dim_; ++j) {
        double* gr = g.data() + j * classes_;
        for (std::size_t c = 0; c < classes_; ++c) gr[c] += x[j] * p[c];
      }
      double* gb = g.data() + input_dim_ * classes_;
      for (std::size_t c = 0; c < classes_; ++c) gb[c] += p[c];
    }
    if (reduction_ == Reduction::mean) {
      for (double& x : g) x /= static_cast<double>(b.size());
    }
    return g;
  }

  std::size_t predict_class(const ParamVector& w, std::span<const double> x) const {
    std::vector<double> z(classes_);
    logits(w, x, z.data());
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  }

 private:
  std::size_t input_dim_;
  std::size_t classes_;
  Reduction reduction_;
};

/// Fully connected ReLU network with a softmax cross-entropy head.
///
/// Parameters are laid out layer by layer: the fan_out x fan_in weight matrix
/// (row-major) followed by the fan_out biases.
class MlpModel {
 public:
  MlpModel(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
           Reduction reduction = Reduction::sum)
      : sizes_(std::move(layer_sizes)), reduction_(reduction) {
    if (sizes_.size() < 2) throw ContractViolation("mlp needs at least input and output sizes");
    for (std::size_t s : sizes_) detail::require_positive(s, "layer size");
    if (sizes_.back() < 2) throw ContractViolation("mlp output must have at least 2 classes");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(offset);
      offset += (sizes_[l] + 1) * sizes_[l + 1];
    }
    param_count_ = offset;

    std::mt19937_64 rng(seed);
    init_.assign(param_count_, 0.0);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const std::size_t fan_in = sizes_[l], fan_out = sizes_[l + 1];
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-a, a);
      for (std::size_t k = 0; k < fan_in * fan_out; ++k) init_[offsets_[l] + k] = dist(rng);
    }
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t class_count() const noexcept { return sizes_.back(); }
  std::size_t param_count() const noexcept { return param_count_; }
  Reduction reduction() const noexcept { return reduction_; }
  const ParamVector& initial_weights() const noexcept { return init_; }

  double loss(const ParamVector& w, const Batch& b) const {
    detail::require_input_dim(b, input_dim());
    Activations act = make_activations();
    double total = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      forward(w, b.features().row(i), act);
      total += detail::softmax_xent(act.z.back(),
                                    detail::class_index(b.targets()[i], class_count()), nullptr);
    }
    return reduce(total, b.size(), reduction_);
  }

  ParamVector gradient(const ParamVector& w, const Batch& b) const {
    detail::require_input_dim(b, input_dim());
    ParamVector g(param_count_, 0.0);
    Activations act = make_activations();
    std::vector<std::vector<double>> delta(layers());
    for (std::size_t l = 0; l < layers(); ++l) delta[l].resize(sizes_[l + 1]);

    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto x = b.features().row(i);
      forward(w, x, act);
      const std::size_t label = detail::class_index(b.targets()[i], class_count());
      detail::softmax_xent(act.z.back(), label, delta.back().data());
      delta.back()[label] -= 1.0;

      for (std::size_t l = layers(); l-- > 0;) {
        const std::size_t fan_in = sizes_[l], fan_out = sizes_[l + 1];
        std::span<const double> in = l == 0 ? x : std::span<const double>(act.h[l - 1]);
        double* gw = g.data() + offsets_[l];
        double* gb = gw + fan_in * fan_out;
        for (std::size_t o = 0; o < fan_out; ++o) {
          const double d = delta[l][o];
          for (std::size_t k = 0; k < fan_in; ++k) gw[o * fan_in + k] += d * in[k];
          gb[o] += d;
        }
        if (l == 0) break;
        const double* wl = w.data() + offsets_[l];
        auto& prev = delta[l - 1];
        std::fill(prev.begin(), prev.end(), 0.0);
        for (std::size_t o = 0; o < fan_out; ++o) {
          const double d = delta[l][o];
          for (std::size_t k = 0; k < fan_in; ++k) prev[k] += d * wl[o * fan_in + k];
        }
        for (std::size_t k = 0; k < fan_in; ++k) {
          if (act.z[l - 1][k] <= 0.0) prev[k] = 0.0;
        }
      }
    }
    if (reduction_ == Reduction::mean) {
      for (double& v : g) v /= static_cast<double>(b.size());
    }
    return g;
  }

  /// Smallest |pre-activation| over all hidden units and examples.
  double kink_margin(const ParamVector& w, const Batch& b) const {
    detail::require_input_dim(b, input_dim());
    Activations act = make_activations();
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < b.size(); ++i) {
      forward(w, b.features().row(i), act);
      for (std::size_t l = 0; l + 1 < layers(); ++l) {
        for (double z : act.z[l]) margin = std::min(margin, std::abs(z));
      }
    }
    return margin;
  }

  std::size_t predict_class(const ParamVector& w, std::span<const double> x) const {
    Activations act = make_activations();
    forward(w, x, act);
    const auto& z = act.z.back();
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  }

 private:
  struct Activations {
    std::vector<std::vector<double>> z;  // pre-activations per layer
    std::vector<std::vector<double>> h;  // ReLU outputs per hidden layer
  };

  std::size_t layers() const noexcept { return sizes_.size() - 1; }

  Activations make_activations() const {
    Activations a;
    for (std::size_t l = 0; l < layers(); ++l) {
      a.z.emplace_back(sizes_[l + 1]);
      if (l + 1 < layers()) a.h.emplace_back(sizes_[l + 1]);
    }
    return a;
  }

  void forward(const ParamVector& w, std::span<const double> x, Activations& act) const {
    std::span<const double> in = x;
    for (std::size_t l = 0; l < layers(); ++l) {
      const std::size_t fan_in = sizes_[l], fan_out = sizes_[l + 1];
      const double* wl = w.data() + offsets_[l];
      const double* bl = wl + fan_in * fan_out;
      auto& z = act.z[l];
      for (std::size_t o = 0; o < fan_out; ++o) {
        double s = bl[o];
        for (std::size_t k = 0; k < fan_in; ++k) s += wl[o * fan_in + k] * in[k];
        z[o] = s;
      }
      if (l + 1 < layers()) {
        auto& h = act.h[l];
        for (std::size_t o = 0; o < fan_out; ++o) h[o] = z[o] > 0.0 ? z[o] : 0.0;
        in = h;
      }
    }
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
  Reduction reduction_;
  ParamVector init_;
};

inline LinearRegressionModel linreg_build(std::size_t input_dim, std::uint64_t /*seed*/,
                                          Reduction reduction = Reduction::sum) {
  return LinearRegressionModel(input_dim, reduction);
}

inline LogisticRegressionModel logreg_build(std::size_t input_dim, std::size_t class_count,
                                            std::uint64_t /*seed*/,
                                            Reduction reduction = Reduction::sum) {
  return LogisticRegressionModel(input_dim, class_count, reduction);
}

inline MlpModel mlp_build(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                          Reduction reduction = Reduction::sum) {
  return MlpModel(std::move(layer_sizes), seed, reduction);
}

enum class BiasColumn { append, none };

/// Minimizer of ||X w - y||^2 via Cholesky on the normal equations. With
/// BiasColumn::append the solution carries the bias last, matching
/// LinearRegressionModel.
inline ParamVector least_squares_closed_form(const Batch& batch,
                                             BiasColumn bias = BiasColumn::append) {
  const std::size_t d = batch.input_dim();
  const std::size_t p = d + (bias == BiasColumn::append ? 1 : 0);
  auto feature = [&](std::span<const double> x, std::size_t j) { return j < d ? x[j] : 1.0; };

  Matrix gram(p, p);
  std::vector<double> rhs(p, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = batch.features().row(i);
    for (std::size_t a = 0; a < p; ++a) {
      const double xa = feature(x, a);
      rhs[a] += xa * batch.targets()[i];
      for (std::size_t c = 0; c <= a; ++c) gram(a, c) += xa * feature(x, c);
    }
  }

  double max_diag = 0.0;
  for (std::size_t a = 0; a < p; ++a) max_diag = std::max(max_diag, gram(a, a));
  const double tiny = 1e-10 * max_diag;

  // Lower-triangular factor, stored in place.
  Matrix chol(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t c = 0; c <= a; ++c) {
      double s = gram(a, c);
      for (std::size_t k = 0; k < c; ++k) s -= chol(a, k) * chol(c, k);
      if (a == c) {
        if (!(s > tiny)) {
          throw SingularMatrixError("normal equations are rank deficient (pivot " +
                                    std::to_string(s) + " at column " + std::to_string(a) +
                                    ")");
        }
        chol(a, a) = std::sqrt(s);
      } else {
        chol(a, c) = s / chol(c, c);
      }
    }
  }

  std::vector<double> y(p);
  for (std::size_t a = 0; a < p; ++a) {
    double s = rhs[a];
    for (std::size_t k = 0; k < a; ++k) s -= chol(a, k) * y[k];
    y[a] = s / chol(a, a);
  }
  ParamVector w(p);
  for (std::size_t a = p; a-- > 0;) {
    double s = y[a];
    for (std::size_t k = a + 1; k < p; ++k) s -= chol(k, a) * w[k];
    w[a] = s / chol(a, a);
  }
  return w;
}

}  // namespace etaopt

#endif  // ETAOPT_MODELS_HPP
