#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/core/error.hpp"
#include "dualview/core/rng.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

struct Dataset {
  std::vector<Vec> inputs;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  std::string provenance;

  std::size_t size() const { return inputs.size(); }
  std::size_t dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

  void validate() const {
    detail::require(inputs.size() == labels.size(), "dataset: inputs and labels differ in length");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      detail::require(inputs[i].size() == dim(), "dataset: ragged input at row " + std::to_string(i));
      for (double v : inputs[i])
        detail::require(std::isfinite(v), "dataset: non-finite value at row " + std::to_string(i));
      detail::require(labels[i] < classes, "dataset: label out of range at row " + std::to_string(i));
    }
  }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset d;
    d.classes = classes;
    d.provenance = provenance;
    for (auto r : rows) {
      d.inputs.push_back(inputs.at(r));
      d.labels.push_back(labels.at(r));
    }
    return d;
  }
};

/// Deterministic shuffle followed by a head/tail split.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  detail::require(test_fraction >= 0.0 && test_fraction < 1.0, "train_test_split: fraction must be in [0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, 0x5711);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_test = static_cast<std::size_t>(std::round(test_fraction * double(data.size())));
  std::vector<std::size_t> train(order.begin() + std::ptrdiff_t(n_test), order.end());
  std::vector<std::size_t> test(order.begin(), order.begin() + std::ptrdiff_t(n_test));
  return {data.subset(train), data.subset(test)};
}

// ---------------------------------------------------------------------------
// Synthetic data

/// blobs: class c centred at separation * e_c with isotropic noise `noise`.
/// circles: two concentric rings of radius 0.5 and 1 (label 0 = inner) in
///   the first two coordinates; any further coordinates hold `offset`, which
///   gives the bias-free networks a constant input to work with.
/// shifted-pulses: class c is a box pulse of width 2(c+1) with random
///   amplitude in [0.5, 1.5], a uniform circular shift and i.i.d. noise.
struct SyntheticSpec {
  std::string kind = "circles";
  std::size_t n = 2000;
  std::size_t d_in = 3;
  std::size_t classes = 2;
  double noise = 0.05;
  double separation = 1.0;
  double offset = 1.0;

  bool operator==(const SyntheticSpec&) const = default;
};

inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  detail::require(spec.n >= 2, "generate_synthetic: n must be at least 2");
  detail::require(spec.classes >= 2, "generate_synthetic: need at least two classes");
  detail::require(spec.noise >= 0.0, "generate_synthetic: noise must be non-negative");
  Dataset d;
  d.classes = spec.classes;
  Rng rng(seed, 0xda7a);
  d.inputs.reserve(spec.n);
  d.labels.reserve(spec.n);
  if (spec.kind == "blobs") {
    detail::require(spec.classes <= spec.d_in, "generate_synthetic: blobs need classes <= d_in");
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t c = i % spec.classes;
      Vec x(spec.d_in);
      for (std::size_t j = 0; j < spec.d_in; ++j) x[j] = (j == c ? spec.separation : 0.0) + spec.noise * rng.normal();
      d.inputs.push_back(std::move(x));
      d.labels.push_back(c);
    }
  } else if (spec.kind == "circles") {
    detail::require(spec.classes == 2, "generate_synthetic: circles have exactly two classes");
    detail::require(spec.d_in >= 2, "generate_synthetic: circles need d_in >= 2");
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t c = i % 2;
      const double radius = c == 0 ? 0.5 : 1.0;
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      Vec x(spec.d_in, spec.offset);
      x[0] = radius * std::cos(angle) + spec.noise * rng.normal();
      x[1] = radius * std::sin(angle) + spec.noise * rng.normal();
      d.inputs.push_back(std::move(x));
      d.labels.push_back(c);
    }
  } else if (spec.kind == "shifted-pulses") {
    detail::require(2 * spec.classes < spec.d_in, "generate_synthetic: shifted-pulses need d_in > 2 * classes");
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t c = i % spec.classes;
      const std::size_t width = 2 * (c + 1);
      const double amp = rng.uniform(0.5, 1.5);
      const std::size_t shift = rng.below(spec.d_in);
      Vec x(spec.d_in);
      for (std::size_t j = 0; j < spec.d_in; ++j) x[j] = spec.noise * rng.normal();
      for (std::size_t j = 0; j < width; ++j) x[(j + shift) % spec.d_in] += amp;
      d.inputs.push_back(std::move(x));
      d.labels.push_back(c);
    }
  } else {
    throw InvalidArgument("generate_synthetic: unknown kind '" + spec.kind + "'");
  }
  d.provenance = "synthetic:" + spec.kind + " n=" + std::to_string(spec.n) + " d_in=" + std::to_string(spec.d_in) +
                 " seed=" + std::to_string(seed);
  return d;
}

// ---------------------------------------------------------------------------
// Files

namespace detail {
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) h = (h ^ b) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
}  // namespace detail

/// One sample per line, comma separated, label in the last column.
/// `classes` = 0 infers the class count from the largest label.
inline Dataset parse_csv_dataset(std::string_view text, bool header, std::size_t classes = 0) {
  Dataset d;
  std::size_t pos = 0, row = 0;
  std::size_t max_label = 0;
  bool skip = header;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_offset = pos;
    pos = end + 1;
    if (skip) {
      skip = false;
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Vec cells;
    std::size_t cpos = 0;
    while (true) {
      std::size_t comma = line.find(',', cpos);
      const std::string cell(line.substr(cpos, comma == std::string_view::npos ? std::string_view::npos : comma - cpos));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ParseError("csv: bad number '" + cell + "' in row " + std::to_string(row), line_offset + cpos);
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        throw ParseError("csv: bad number '" + cell + "' in row " + std::to_string(row), line_offset + cpos);
      cells.push_back(v);
      if (comma == std::string_view::npos) break;
      cpos = comma + 1;
    }
    if (cells.size() < 2) throw ParseError("csv: row " + std::to_string(row) + " needs features and a label", line_offset);
    const double label = cells.back();
    cells.pop_back();
    if (label < 0 || label != std::floor(label) || (classes && label >= double(classes)))
      throw ParseError("csv: label out of range in row " + std::to_string(row), line_offset);
    if (!d.inputs.empty() && cells.size() != d.dim())
      throw ParseError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " features, expected " +
                           std::to_string(d.dim()),
                       line_offset);
    for (double v : cells)
      if (!std::isfinite(v)) throw ParseError("csv: non-finite value in row " + std::to_string(row), line_offset);
    max_label = std::max(max_label, static_cast<std::size_t>(label));
    d.inputs.push_back(std::move(cells));
    d.labels.push_back(static_cast<std::size_t>(label));
    ++row;
  }
  if (d.inputs.empty()) throw ParseError("csv: no samples", 0);
  d.classes = classes ? classes : std::max<std::size_t>(2, max_label + 1);
  d.provenance = "csv fnv1a=" + detail::fnv1a_hex(text);
  return d;
}

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// CIFAR-10 binary batches: 1 label byte then 3072 pixel bytes (R, G and B
/// planes of 32x32), scaled to [0, 1].
inline Dataset parse_cifar_binary(std::string_view bytes, std::size_t classes = 10) {
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
    const std::size_t bad = bytes.size() - bytes.size() % kCifarRecordBytes;
    throw ParseError("cifar-binary: incomplete record of " + std::to_string(bytes.size() - bad) + " bytes", bad);
  }
  Dataset d;
  d.classes = classes;
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  d.inputs.reserve(n);
  d.labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t off = r * kCifarRecordBytes;
    const auto label = static_cast<unsigned char>(bytes[off]);
    if (label >= classes) throw ParseError("cifar-binary: label " + std::to_string(label) + " out of range", off);
    Vec x(kCifarRecordBytes - 1);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = static_cast<unsigned char>(bytes[off + 1 + j]) / 255.0;
    d.inputs.push_back(std::move(x));
    d.labels.push_back(label);
  }
  d.provenance = "cifar-binary fnv1a=" + detail::fnv1a_hex(bytes);
  return d;
}

inline Dataset load_dataset(const std::string& path, std::string_view format, bool header = false,
                            std::size_t classes = 0) {
  const std::string bytes = detail::slurp(path);
  Dataset d;
  try {
    if (format == "csv")
      d = parse_csv_dataset(bytes, header, classes);
    else if (format == "cifar-binary")
      d = parse_cifar_binary(bytes, classes ? classes : 10);
    else
      throw InvalidArgument("load_dataset: unknown format '" + std::string(format) + "'");
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.offset());
  }
  d.provenance = path + " " + d.provenance;
  return d;
}

}  // namespace dualview
