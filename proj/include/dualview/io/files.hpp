#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <system_error>

#include "dualview/core/error.hpp"

namespace dualview {

/// Creates `dir` (and parents) if missing.
inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "': " + (ec ? ec.message() : "not a directory"));
}

/// Writes a file through `fill`; every failure names the path.
inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill,
                       bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  fill(out);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace dualview
