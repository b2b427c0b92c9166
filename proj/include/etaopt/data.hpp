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

#ifndef ETAOPT_DATA_HPP
#define ETAOPT_DATA_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "etaopt/errors.hpp"
#include "etaopt/model_api.hpp"

namespace etaopt {

/// Per-column z-score parameters, estimated on a training split.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct Dataset {
  std::string name;
  Matrix features;
  std::vector<double> targets;
  std::vector<std::string> feature_names;
  std::string target_name;
  /// 0 for regression targets.
  std::size_t class_count = 0;
  std::optional<Normalization> normalization;

  std::size_t size() const noexcept { return targets.size(); }
  std::size_t input_dim() const noexcept { return features.cols(); }
  bool is_classification() const noexcept { return class_count > 0; }

  Batch to_batch() const { return Batch(features, targets); }

  /// Rows in the given order.
  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.target_name = target_name;
    out.class_count = class_count;
    out.normalization = normalization;
    std::vector<double> data;
    data.reserve(rows.size() * input_dim());
    out.targets.reserve(rows.size());
    for (std::size_t r : rows) {
      const auto row = features.row(r);
      data.insert(data.end(), row.begin(), row.end());
      out.targets.push_back(targets[r]);
    }
    out.features = Matrix(rows.size(), input_dim(), std::move(data));
    return out;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Finite decimal real occupying the whole cell.
inline std::optional<double> parse_real(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

inline std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p[i - 1], p[pick(rng)]);
  }
  return p;
}

}  // namespace detail

/// Reads a comma-separated file. With a header, `target_column` names the
/// target; without one it is a 0-based column index.
inline Dataset load_csv(const std::filesystem::path& path, const std::string& target_column,
                        bool has_header = true) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  std::size_t cols = 0;
  if (has_header) {
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
    ++line_no;
    for (auto c : detail::split_commas(line)) names.emplace_back(c);
    cols = names.size();
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cols == 0) {
      cols = cells.size();
      for (std::size_t c = 0; c < cols; ++c) names.push_back(std::to_string(c));
    }
    if (cells.size() != cols) {
      throw SchemaError(path.string() + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected " + std::to_string(cols));
    }
    std::vector<double> row(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = detail::parse_real(cells[c]);
      if (!v) throw ParseError(line_no, names[c], std::string(cells[c]));
      row[c] = *v;
    }
    rows.push_back(std::move(row));
  }

  const auto hit = std::find(names.begin(), names.end(), target_column);
  if (hit == names.end()) {
    throw SchemaError(path.string() + ": no column named '" + target_column + "'");
  }
  const std::size_t target = static_cast<std::size_t>(hit - names.begin());

  Dataset ds;
  ds.name = path.stem().string();
  ds.target_name = names[target];
  for (std::size_t c = 0; c < cols; ++c) {
    if (c != target) ds.feature_names.push_back(names[c]);
  }
  std::vector<double> data;
  data.reserve(rows.size() * (cols - 1));
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c != target) data.push_back(row[c]);
    }
    ds.targets.push_back(row[target]);
  }
  ds.features = Matrix(rows.size(), cols - 1, std::move(data));
  return ds;
}

/// Features first, target last, with a header line.
inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path.string());
  for (std::size_t c = 0; c < ds.input_dim(); ++c) {
    out << (c < ds.feature_names.size() ? ds.feature_names[c] : "x" + std::to_string(c)) << ',';
  }
  out << (ds.target_name.empty() ? "y" : ds.target_name) << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.features.row(r)) out << detail::format_real(v) << ',';
    out << detail::format_real(ds.targets[r]) << '\n';
  }
}

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// IDX image/label pair; pixels are scaled to [0, 1].
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw SchemaError("cannot open " + images_path.string());
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw SchemaError("cannot open " + labels_path.string());

  const std::string ip = images_path.string(), lp = labels_path.string();
  if (const auto m = detail::read_be32(img, ip); m != kIdxImagesMagic) {
    throw FormatError(ip + ": bad IDX magic, expected " + detail::hex32(kIdxImagesMagic) +
                      ", got " + detail::hex32(m));
  }
  if (const auto m = detail::read_be32(lab, lp); m != kIdxLabelsMagic) {
    throw FormatError(lp + ": bad IDX magic, expected " + detail::hex32(kIdxLabelsMagic) +
                      ", got " + detail::hex32(m));
  }
  const std::size_t n = detail::read_be32(img, ip);
  const std::size_t rows = detail::read_be32(img, ip);
  const std::size_t cols = detail::read_be32(img, ip);
  const std::size_t n_labels = detail::read_be32(lab, lp);
  if (n != n_labels) {
    throw FormatError("IDX count mismatch: " + std::to_string(n) + " images vs " +
                      std::to_string(n_labels) + " labels");
  }

  const std::size_t pixels = rows * cols;
  std::vector<unsigned char> raw(n * pixels);
  if (!img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw FormatError(ip + ": fewer pixels than the header declares");
  }
  std::vector<unsigned char> labels(n);
  if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n))) {
    throw FormatError(lp + ": fewer labels than the header declares");
  }

  Dataset ds;
  ds.name = images_path.stem().string();
  ds.target_name = "label";
  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] / 255.0;
  ds.features = Matrix(n, pixels, std::move(data));
  unsigned char top = 0;
  for (unsigned char l : labels) {
    ds.targets.push_back(l);
    top = std::max(top, l);
  }
  ds.class_count = std::max<std::size_t>(2, std::size_t{top} + 1);
  for (std::size_t p = 0; p < pixels; ++p) ds.feature_names.push_back("px" + std::to_string(p));
  return ds;
}

/// Writes raw bytes as an IDX image/label pair (images are n x rows x cols).
inline void write_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path,
                      std::span<const unsigned char> pixels, std::span<const unsigned char> labels,
                      std::uint32_t rows, std::uint32_t cols) {
  if (pixels.size() != labels.size() * rows * cols) {
    throw ContractViolation("pixel count does not match labels x rows x cols");
  }
  std::ofstream img(images_path, std::ios::binary);
  detail::write_be32(img, kIdxImagesMagic);
  detail::write_be32(img, static_cast<std::uint32_t>(labels.size()));
  detail::write_be32(img, rows);
  detail::write_be32(img, cols);
  img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  std::ofstream lab(labels_path, std::ios::binary);
  detail::write_be32(lab, kIdxLabelsMagic);
  detail::write_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

struct SyntheticRegression {
  Dataset data;
  /// input_dim weights followed by the bias.
  ParamVector true_weights;
};

/// y = X w0 + b0 + N(0, noise_std^2), X standard normal.
inline SyntheticRegression synthesize_regression(std::size_t n, std::size_t d, double noise_std,
                                                 std::uint64_t seed) {
  if (n == 0 || d == 0) throw ContractViolation("synthetic regression needs n, d > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SyntheticRegression out;
  out.true_weights.resize(d + 1);
  for (double& w : out.true_weights) w = normal(rng);

  std::vector<double> x(n * d);
  for (double& v : x) v = normal(rng);
  out.data.name = "synthetic_regression";
  out.data.target_name = "y";
  for (std::size_t j = 0; j < d; ++j) out.data.feature_names.push_back("x" + std::to_string(j));
  out.data.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = out.true_weights[d];
    for (std::size_t j = 0; j < d; ++j) y += x[i * d + j] * out.true_weights[j];
    out.data.targets[i] = y + (noise_std > 0.0 ? noise_std * normal(rng) : 0.0);
  }
  out.data.features = Matrix(n, d, std::move(x));
  return out;
}

/// Unit-variance Gaussian blobs. Class means sit on a regular polygon in the
/// first two coordinates (a line when d == 1) with adjacent means
/// `separation` apart. Labels cycle 0, 1, ..., classes - 1.
inline Dataset synthesize_classification(std::size_t n, std::size_t d, std::size_t classes,
                                         double separation, std::uint64_t seed) {
  if (n == 0 || d == 0 || classes < 2) {
    throw ContractViolation("synthetic classification needs n, d > 0 and classes >= 2");
  }
  std::vector<std::vector<double>> means(classes, std::vector<double>(d, 0.0));
  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t k = 0; k < classes; ++k) {
    if (d == 1) {
      means[k][0] = separation * static_cast<double>(k);
    } else {
      const double radius = separation / (2.0 * std::sin(kPi / static_cast<double>(classes)));
      const double angle = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(classes);
      means[k][0] = radius * std::cos(angle);
      means[k][1] = radius * std::sin(angle);
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "synthetic_classification";
  ds.target_name = "label";
  ds.class_count = classes;
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  std::vector<double> x(n * d);
  ds.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % classes;
    ds.targets[i] = static_cast<double>(k);
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = means[k][j] + normal(rng);
  }
  ds.features = Matrix(n, d, std::move(x));
  return ds;
}

struct SplitSpec {
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t val_count = 0;
  std::uint64_t shuffle_seed = 0;
  /// false keeps file order: the first train_count rows train, and so on.
  bool shuffle = true;
};

struct Splits {
  Dataset train;
  Dataset test;
  Dataset val;
};

/// Seeded permutation (or file order), then consecutive train/test/val slices.
inline Splits split(const Dataset& ds, const SplitSpec& spec) {
  const std::size_t total = spec.train_count + spec.test_count + spec.val_count;
  if (total > ds.size()) {
    throw SizeError("split asks for " + std::to_string(total) + " examples, dataset has " +
                    std::to_string(ds.size()));
  }
  std::vector<std::size_t> perm(ds.size());
  if (spec.shuffle) {
    perm = detail::permutation(ds.size(), spec.shuffle_seed);
  } else {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
  }
  const std::span<const std::size_t> all(perm);
  Splits s;
  s.train = ds.subset(all.subspan(0, spec.train_count));
  s.test = ds.subset(all.subspan(spec.train_count, spec.test_count));
  s.val = ds.subset(all.subspan(spec.train_count + spec.test_count, spec.val_count));
  return s;
}

/// Estimates z-score parameters on `splits.train` and applies them to every
/// split. Constant columns keep unit scale.
inline void standardize(Splits& splits) {
  const Dataset& train = splits.train;
  const std::size_t d = train.input_dim();
  Normalization norm{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (train.size() > 0) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) mean += train.features(i, j);
      mean /= static_cast<double>(train.size());
      double var = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) {
        const double c = train.features(i, j) - mean;
        var += c * c;
      }
      const double sd = std::sqrt(var / static_cast<double>(train.size()));
      norm.mean[j] = mean;
      norm.stddev[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  for (Dataset* part : {&splits.train, &splits.test, &splits.val}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      auto row = part->features.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - norm.mean[j]) / norm.stddev[j];
    }
    part->normalization = norm;
  }
}

/// Epoch-wise minibatches over one split. The visiting order of each epoch is
/// a pure function of (seed, epoch); the last batch of an epoch may be short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& source, std::size_t batch_size, std::uint64_t seed)
      : source_(&source), batch_size_(batch_size), seed_(seed) {
    if (batch_size == 0) throw ContractViolation("batch_size must be >= 1");
    if (source.size() == 0) throw ContractViolation("cannot batch an empty split");
  }

  std::size_t batch_size() const noexcept { return batch_size_; }
  std::size_t batches_per_epoch() const noexcept {
    return (source_->size() + batch_size_ - 1) / batch_size_;
  }

  std::vector<std::size_t> epoch_order(std::size_t epoch) const {
    return detail::permutation(source_->size(),
                               detail::splitmix64(seed_ ^ detail::splitmix64(epoch)));
  }

  std::vector<Batch> epoch(std::size_t epoch) const {
    const auto order = epoch_order(epoch);
    const std::span<const std::size_t> all(order);
    std::vector<Batch> out;
    out.reserve(batches_per_epoch());
    for (std::size_t start = 0; start < all.size(); start += batch_size_) {
      const std::size_t len = std::min(batch_size_, all.size() - start);
      out.push_back(source_->subset(all.subspan(start, len)).to_batch());
    }
    return out;
  }

 private:
  const Dataset* source_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

}  // namespace etaopt

#endif  // ETAOPT_DATA_HPP
