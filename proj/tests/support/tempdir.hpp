#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "cmsent/errors.hpp"

namespace cmsent::testsupport {

/// Fresh directory under the system temp root, wiped on construction so a
/// rerun never sees stale artifacts. Left in place afterwards for debugging.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(std::string_view tag) {
    path = std::filesystem::temp_directory_path() / "cmsent-tests" /
           std::string(tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }

  std::filesystem::path file(std::string_view name) const {
    return path / std::string(name);
  }
};

inline std::filesystem::path write_file(const std::filesystem::path& path,
                                        std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("test setup: cannot write " + path.string());
  return path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("test setup: cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace cmsent::testsupport
