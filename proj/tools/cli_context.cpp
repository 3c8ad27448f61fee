#include "cli_context.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

#include "weavesim/common.hpp"

namespace weavesim::cli {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw SimulationError("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw SimulationError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw SimulationError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::filesystem::path Context::output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative() && !out_dir.empty()) p = out_dir / p;
  const std::string logical = p.lexically_normal().string();
  logical_outputs_.push_back(logical);
  if (replay_dir) {
    return *replay_dir / (std::to_string(logical_outputs_.size() - 1) + "_" + p.filename().string());
  }
  return p;
}

void Context::write(const std::filesystem::path& resolved, const std::string& content) {
  write_atomic(resolved, content);
  outputs_.push_back({logical_outputs_.empty() ? resolved.string() : logical_outputs_.back(), fnv1a64(content)});
}

std::string Context::read_input(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open input file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string content = ss.str();
  inputs_.push_back({path.string(), fnv1a64(content)});
  return content;
}

std::filesystem::path find_data_file(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::exists(p)) return p;
  if (p.is_relative()) {
    if (const char* env = std::getenv("WEAVESIM_DATA")) {
      std::stringstream dirs(env);
      std::string dir;
      while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        const auto candidate = std::filesystem::path(dir) / p;
        if (std::filesystem::exists(candidate)) return candidate;
      }
    }
  }
  return p;
}

}  // namespace weavesim::cli
