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

#ifndef ETAOPT_ERRORS_HPP
#define ETAOPT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace etaopt {

/// Precondition broken by the caller (mismatched lengths, bad hyperparameters).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// f(eta) = L(w - eta g) was not finite at the probed learning rate.
class DivergedProbe : public std::runtime_error {
 public:
  DivergedProbe(double eta, double value)
      : std::runtime_error("diverged probe: f(" + std::to_string(eta) +
                           ") = " + std::to_string(value)),
        eta_(eta),
        value_(value) {}

  double eta() const noexcept { return eta_; }
  double value() const noexcept { return value_; }

 private:
  double eta_;
  double value_;
};

/// Training produced non-finite weights, gradients or learning rate.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset file (bad magic, inconsistent counts, unparseable cell).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV cell that does not parse as a decimal real.
class ParseError : public FormatError {
 public:
  ParseError(std::size_t row, std::string column, const std::string& cell)
      : FormatError("cannot parse '" + cell + "' at row " +
                    std::to_string(row) + ", column " + column),
        row_(row),
        column_(std::move(column)) {}

  /// 1-based line number in the file, header included.
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Split counts exceed the dataset size.
class SizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric files passed to compare_runs cannot be aligned.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace etaopt

#endif  // ETAOPT_ERRORS_HPP
