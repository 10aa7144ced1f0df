#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace fixtures {

namespace fs = std::filesystem;

fs::path data_path(const std::string& relative) { return fs::path(PEDSIM_TEST_DATA) / relative; }

std::string read_text(const std::string& relative) {
  std::ifstream in(data_path(relative), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + relative);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

std::vector<std::string> golden_replies() {
  const auto text = read_text("appendix_b_replies.txt");
  std::vector<std::string> out;
  std::string cur;
  for (const auto& line : lines(text)) {
    if (line == "=====") {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += line + "\n";
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> golden_summary() { return lines(read_text("appendix_b_summary.txt")); }
std::vector<std::string> golden_statuses() { return lines(read_text("appendix_b_status.txt")); }

std::vector<std::pair<std::string, pedsim::PersonaProfile>> appendix_personas() {
  return pedsim::parse_persona_collection(read_text("personas/appendix_a.json"));
}

pedsim::PersonaProfile golden_persona() {
  for (auto& [key, p] : appendix_personas()) {
    if (key == "test16") return p;
  }
  throw std::runtime_error("test16 fixture missing");
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() / ("pedsim_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace fixtures
