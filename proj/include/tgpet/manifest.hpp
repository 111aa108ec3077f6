#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tgpet {

/// Lowercase hex SHA-256 of a file's bytes or of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// `git describe` of the source tree at configure time.
const char* build_version();

/// Record written next to each subcommand's outputs. Paths are
/// stored relative to the output directory when they live inside it.
struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  void write(const std::filesystem::path& out_dir) const;
};

}  // namespace tgpet
