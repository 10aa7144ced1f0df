#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pedsim/persona_forge.hpp"

namespace fixtures {

std::filesystem::path data_path(const std::string& relative);
std::string read_text(const std::string& relative);

// The nine recorded decision replies and the matching summary and status
// lines of the golden no-ehmi_stop trial.
std::vector<std::string> golden_replies();
std::vector<std::string> golden_summary();
std::vector<std::string> golden_statuses();

// Keyed persona collection from tests/data/personas/appendix_a.json.
std::vector<std::pair<std::string, pedsim::PersonaProfile>> appendix_personas();
pedsim::PersonaProfile golden_persona();  // test16

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
