#include <algorithm>
#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "json.hpp"
#include "pedsim/errors.hpp"
#include "pedsim/oracle_gateway.hpp"
#include "util.hpp"

namespace pedsim {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSidecar = "frames.json";

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string substitute(std::string_view tmpl, const std::string& input, const std::string& outdir) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.substr(i, 7) == "{input}") {
      out += shell_quote(input);
      i += 7;
    } else if (tmpl.substr(i, 8) == "{outdir}") {
      out += shell_quote(outdir);
      i += 8;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> frames;
  if (!fs::is_directory(dir)) return frames;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = detail::to_lower(e.path().extension().string());
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".png") frames.push_back(e.path());
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

std::optional<std::size_t> recorded_count(const fs::path& dir) {
  const auto sidecar = dir / kSidecar;
  if (!fs::exists(sidecar)) return std::nullopt;
  try {
    return nlohmann::json::parse(detail::read_file(sidecar)).at("count").get<std::size_t>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

ExtractionResult extract_frames(const fs::path& clip, std::string_view command_template,
                                const std::optional<fs::path>& outdir) {
  if (!fs::is_regular_file(clip)) throw ExtractionError("clip not found: " + clip.string());
  const fs::path dir = outdir ? *outdir : fs::path(clip.string() + ".frames");

  auto existing = list_frames(dir);
  const auto recorded = recorded_count(dir);
  if (recorded && *recorded == existing.size() && !existing.empty()) return {std::move(existing), false};

  fs::create_directories(dir);
  for (const auto& f : existing) fs::remove(f);

  const auto command = substitute(command_template, fs::absolute(clip).string(), fs::absolute(dir).string()) + " 2>&1";
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) throw ExtractionError("cannot start frame extractor: " + command);
  std::string output;
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (code != 0) {
    throw ExtractionError("frame extractor failed (exit " + std::to_string(code) + ") on " + clip.string() +
                          ": " + std::string(detail::trim(output)));
  }

  auto frames = list_frames(dir);
  if (frames.empty()) throw ExtractionError("frame extractor produced no frames for " + clip.string());
  nlohmann::ordered_json sidecar;
  sidecar["clip"] = fs::absolute(clip).string();
  sidecar["count"] = frames.size();
  detail::write_file_atomic(dir / kSidecar, sidecar.dump(2) + "\n");
  return {std::move(frames), true};
}

FrameExtractorFn make_frame_extractor(std::string command_template) {
  return [tmpl = std::move(command_template)](const fs::path& clip, const fs::path& outdir) {
    return extract_frames(clip, tmpl, outdir).frames;
  };
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> out;
  if (n == 0 || cap == 0) return out;
  if (n <= cap) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  if (cap == 1) return {0};
  out.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) {
    // Rounded position on the [0, n-1] line keeps both ends.
    out.push_back((i * (n - 1) * 2 + (cap - 1)) / ((cap - 1) * 2));
  }
  return out;
}

}  // namespace pedsim
