#pragma once

// Test helper: drive the installed CLI binary (path in $NBDIFF_BIN).

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace nbdiff::testing {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

inline std::string cli_binary() {
  const char* bin = std::getenv("NBDIFF_BIN");
  return bin ? bin : "";
}

inline CommandResult run_cli_command(const std::string& args) {
  CommandResult result;
  std::string cmd = cli_binary() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    result.output.append(buf.data(), n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

inline std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::map<std::string, std::string> out;
  for (const auto& line : read_lines(path)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

/// Fresh scratch directory under /tmp, removed on destruction.
struct ScratchDir {
  std::filesystem::path path;

  explicit ScratchDir(const std::string& tag) {
    path = std::filesystem::path("/tmp") / ("nbdiff_cli_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~ScratchDir() { std::filesystem::remove_all(path); }

  std::string sub(const std::string& name) const { return (path / name).string(); }
};

inline std::string tiny_flags() {
  return "--image_h 16 --image_w 16 --bank_n 8 --t_steps 10 --beta_end 0.2 "
         "--base_channels 4 --levels 1 --time_channels 2 --batch_size 2 "
         "--max_steps 10 --check_interval 5 --validation_size 2 "
         "--dataset_count 6";
}

}  // namespace nbdiff::testing
