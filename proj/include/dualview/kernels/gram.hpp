#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/core/error.hpp"
#include "dualview/core/parallel.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

enum class KernelTag { NpkDirect, NpkBrute, Ntk, NtkMcMean };

inline std::string_view to_string(KernelTag t) {
  switch (t) {
    case KernelTag::NpkDirect: return "npk-direct";
    case KernelTag::NpkBrute: return "npk-brute";
    case KernelTag::Ntk: return "ntk";
    case KernelTag::NtkMcMean: return "ntk-mc-mean";
  }
  return "?";
}

inline KernelTag kernel_tag_from_string(std::string_view s) {
  for (auto t : {KernelTag::NpkDirect, KernelTag::NpkBrute, KernelTag::Ntk, KernelTag::NtkMcMean})
    if (to_string(t) == s) return t;
  throw InvalidArgument("unknown kernel tag '" + std::string(s) + "'");
}

/// FNV-1a over the raw bytes of a row-major dataset.
inline std::string dataset_fingerprint(const std::vector<Vec>& points) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 0x100000001b3ULL;
  };
  for (const auto& row : points) {
    const std::uint64_t n = row.size();
    mix(&n, sizeof n);
    mix(row.data(), row.size() * sizeof(double));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct GramMatrix {
  std::size_t n = 0;
  Vec data;  // row-major n x n
  KernelTag tag = KernelTag::NpkDirect;
  std::string fingerprint;

  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
  }

  double max_asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
    return worst;
  }

  double min_eigenvalue() const {
    if (n == 0) return 0.0;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(data.data(), long(n),
                                                                                              long(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

  /// Eigenvalue floor used throughout: min eig >= -1e-8 * trace / n.
  double psd_floor() const { return n == 0 ? 0.0 : -1e-8 * trace() / double(n); }
  bool is_psd() const { return min_eigenvalue() >= psd_floor(); }
  bool is_symmetric(double tol = 1e-12) const { return max_asymmetry() <= tol; }
};

using KernelFn = std::function<double(std::span<const double>, std::span<const double>)>;

inline constexpr std::size_t kDefaultGramCap = 2048;

/// Fills the upper triangle of k over `points` in parallel and mirrors it.
inline GramMatrix gram(const std::vector<Vec>& points, const KernelFn& kernel, KernelTag tag,
                       std::size_t cap = kDefaultGramCap) {
  const std::size_t n = points.size();
  detail::require(n <= cap, "gram: " + std::to_string(n) + " points exceed the cap of " + std::to_string(cap));
  GramMatrix g;
  g.n = n;
  g.tag = tag;
  g.fingerprint = dataset_fingerprint(points);
  g.data.assign(n * n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      double v;
      try {
        v = kernel(points[i], points[j]);
      } catch (const std::exception& e) {
        throw std::runtime_error("gram: kernel failed on pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                 "): " + e.what());
      }
      g.data[i * n + j] = v;
      g.data[j * n + i] = v;
    }
  });
  return g;
}

// ---------------------------------------------------------------------------
// Serialization
//
// CSV: a header line "# kernel=<tag> n=<n> fingerprint=<hex>" followed by n
// comma-separated rows printed with 17 significant digits.
// Binary: "NPKG", u32 n (little-endian), then n*n little-endian f64 row-major.

inline void write_gram_csv(std::ostream& os, const GramMatrix& g) {
  os << "# kernel=" << to_string(g.tag) << " n=" << g.n << " fingerprint=" << g.fingerprint << "\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) os << (j ? "," : "") << g(i, j);
    os << "\n";
  }
}

inline GramMatrix read_gram_csv(std::istream& is) {
  GramMatrix g;
  std::string line;
  std::uint64_t offset = 0;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw ParseError("gram csv: missing header", 0);
  {
    std::istringstream hs(line.substr(2));
    std::string tok;
    bool have_n = false;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "kernel") g.tag = kernel_tag_from_string(val);
      if (key == "n") {
        g.n = std::stoull(val);
        have_n = true;
      }
      if (key == "fingerprint") g.fingerprint = val;
    }
    if (!have_n) throw ParseError("gram csv: header lacks n=", 0);
  }
  offset += line.size() + 1;
  g.data.reserve(g.n * g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (!std::getline(is, line)) throw ParseError("gram csv: expected " + std::to_string(g.n) + " rows", offset);
    std::istringstream rs(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(rs, cell, ',')) {
      try {
        g.data.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("gram csv: bad number '" + cell + "'", offset);
      }
      ++cols;
    }
    if (cols != g.n) throw ParseError("gram csv: row " + std::to_string(i) + " has " + std::to_string(cols) + " columns", offset);
    offset += line.size() + 1;
  }
  return g;
}

namespace detail {
template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}
template <typename T>
T get_le(std::istream& is, std::uint64_t offset) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw ParseError("unexpected end of binary data", offset);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}
}  // namespace detail

inline void write_gram_binary(std::ostream& os, const GramMatrix& g) {
  detail::require(g.n <= UINT32_MAX, "write_gram_binary: matrix too large");
  os.write("NPKG", 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n));
  for (double v : g.data) detail::put_le<double>(os, v);
}

inline GramMatrix read_gram_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "NPKG") throw ParseError("gram binary: bad magic", 0);
  GramMatrix g;
  g.n = detail::get_le<std::uint32_t>(is, 4);
  g.data.resize(g.n * g.n);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = detail::get_le<double>(is, 8 + 8 * i);
  return g;
}

}  // namespace dualview
