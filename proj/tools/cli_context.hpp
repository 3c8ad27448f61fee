#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace weavesim::cli {

struct FileRecord {
  std::string path;
  std::uint64_t fnv1a64 = 0;
};

// Shared state of one CLI invocation: global flags, the files it read and
// wrote, and the remapping used when replaying a manifest.
class Context {
 public:
  std::uint64_t seed = 1;
  int threads = 0;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> config_hash;

  // Replay writes every output below this directory instead of its recorded path.
  std::optional<std::filesystem::path> replay_dir;

  // Resolves an output path (relative paths land in out_dir) and records it.
  std::filesystem::path output(const std::string& path);
  // Writes content to a temporary sibling and renames it into place.
  void write(const std::filesystem::path& resolved, const std::string& content);
  void write_output(const std::string& path, const std::string& content) { write(output(path), content); }

  std::string read_input(const std::filesystem::path& path);

  const std::vector<FileRecord>& outputs() const { return outputs_; }
  const std::vector<FileRecord>& inputs() const { return inputs_; }
  const std::vector<std::string>& logical_outputs() const { return logical_outputs_; }

 private:
  std::vector<FileRecord> outputs_;
  std::vector<FileRecord> inputs_;
  std::vector<std::string> logical_outputs_;
};

std::uint64_t fnv1a64(const std::string& bytes);
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Searches the path as given, then each directory of $WEAVESIM_DATA.
std::filesystem::path find_data_file(const std::string& path);

// Figure bundles; files are written through ctx.
void reproduce_figure(Context& ctx, const std::string& name, const std::string& scale);

}  // namespace weavesim::cli
