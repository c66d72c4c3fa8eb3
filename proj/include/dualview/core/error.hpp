#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dualview {

/// Precondition violation on a public operation (bad shape, non-positive scale, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Path enumeration refused because the requested network has too many paths.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::uint64_t paths, std::uint64_t budget)
      : std::runtime_error("path enumeration refused: network has " +
                           std::to_string(paths) + " paths, budget is " +
                           std::to_string(budget)),
        paths_(paths),
        budget_(budget) {}

  std::uint64_t paths() const noexcept { return paths_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  std::uint64_t paths_;
  std::uint64_t budget_;
};

/// Malformed input file; carries the byte offset of the offending record.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Numerical failure during training (non-finite gradient, diverged loss).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or directory that cannot be opened, created or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}
}  // namespace detail

}  // namespace dualview
