#include "pedsim/decision.hpp"

#include <array>
#include <cctype>
#include <optional>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "pedsim/errors.hpp"
#include "util.hpp"

namespace pedsim {

namespace {

// Drops leading markdown decoration ("**", "- ", "# ") and bold markers.
std::string normalize_line(std::string_view raw) {
  std::string line;
  for (char c : detail::trim(raw)) {
    if (c != '*') line.push_back(c);
  }
  std::string_view v = line;
  while (!v.empty() && (v.front() == '-' || v.front() == '#' || v.front() == '>' || v.front() == ' '))
    v.remove_prefix(1);
  return std::string(v);
}

std::optional<std::string> labeled_value(const std::vector<std::string>& lines, std::string_view label,
                                         std::size_t* index = nullptr) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::starts_with_ci(lines[i], label)) {
      if (index) *index = i;
      return std::string(detail::trim(std::string_view(lines[i]).substr(label.size())));
    }
  }
  return std::nullopt;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view to_string(Action a) {
  switch (a) {
    case Action::forward: return "forward";
    case Action::stop: return "stop";
    case Action::backward: return "backward";
  }
  return "stop";
}

Action parse_action(std::string_view text) {
  auto t = detail::to_lower(detail::trim(text));
  while (!t.empty() && (t.back() == '.' || t.back() == '!' || t.back() == ',')) t.pop_back();
  if (t == "forward") return Action::forward;
  if (t == "stop") return Action::stop;
  if (t == "backward") return Action::backward;
  throw FormatError("unknown action \"" + std::string(text) + "\"");
}

std::string render_status(int position) {
  if (position < 0 || position > 5) {
    throw ContractViolation("render_status: position " + std::to_string(position) + " outside 0..5");
  }
  std::string out;
  for (int i = 0; i < 5; ++i) {
    out += (i == position) ? '*' : 'o';
    out += '-';
  }
  out += (position == 5) ? "|*ROAD" : "|ROAD";
  return out;
}

ParsedRating parse_rating_reply(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_digit(text[i]) || (i > 0 && is_digit(text[i - 1]))) continue;
    std::size_t j = i;
    int value = 0;
    while (j < text.size() && is_digit(text[j])) value = value * 10 + (text[j++] - '0');
    std::size_t k = j;
    while (k < text.size() && text[k] == ' ') ++k;
    if (k >= text.size() || text[k] != '/') continue;
    ++k;
    while (k < text.size() && text[k] == ' ') ++k;
    std::size_t d = k;
    int denom = 0;
    while (d < text.size() && is_digit(text[d])) denom = denom * 10 + (text[d++] - '0');
    if (d == k) continue;
    if (denom != 5) throw FormatError(fmt::format("rating must be on a 5-point scale, got /{}", denom));
    if (value < 1 || value > 5) throw FormatError(fmt::format("rating {}/5 outside 1..5", value));
    auto rest = detail::trim(text.substr(d));
    while (!rest.empty() && (rest.front() == '-' || rest.front() == ':' || rest.front() == ','))
      rest = detail::trim(rest.substr(1));
    return {value, std::string(rest)};
  }
  // Bare leading integer ("4 - reason").
  auto t = detail::trim(text);
  if (!t.empty() && is_digit(t.front()) && (t.size() == 1 || !is_digit(t[1]))) {
    const int value = t.front() - '0';
    if (value < 1 || value > 5) throw FormatError(fmt::format("rating {} outside 1..5", value));
    auto rest = detail::trim(t.substr(1));
    while (!rest.empty() && (rest.front() == '-' || rest.front() == ':'))
      rest = detail::trim(rest.substr(1));
    return {value, std::string(rest)};
  }
  throw FormatError("no x/5 rating found in \"" + std::string(text.substr(0, 80)) + "\"");
}

ParsedDecision parse_decision_reply(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) lines.push_back(normalize_line(line));
  }
  const auto decision = labeled_value(lines, "Decision:");
  if (!decision) throw FormatError("reply has no \"Decision:\" line");
  std::size_t reason_index = 0;
  auto reason = labeled_value(lines, "Reason:", &reason_index);
  if (!reason) throw FormatError("reply has no \"Reason:\" line");
  if (reason->empty()) {
    // Reason text may start on the following line.
    for (std::size_t i = reason_index + 1; i < lines.size() && reason->empty(); ++i) {
      if (detail::starts_with_ci(lines[i], "Confidence:") || detail::starts_with_ci(lines[i], "Trust:")) break;
      *reason = std::string(detail::trim(lines[i]));
    }
    if (reason->empty()) throw FormatError("reply has an empty \"Reason:\"");
  }
  const auto confidence = labeled_value(lines, "Confidence:");
  if (!confidence) throw FormatError("reply has no \"Confidence:\" line");
  const auto trust = labeled_value(lines, "Trust:");
  if (!trust) throw FormatError("reply has no \"Trust:\" line");

  ParsedDecision d;
  d.action = parse_action(*decision);
  d.reason = *reason;
  d.confidence = parse_rating_reply(*confidence).value;
  d.trust = parse_rating_reply(*trust).value;
  return d;
}

std::string format_decision_reply(const ParsedDecision& d) {
  return fmt::format("Decision: {}\nReason: {}\nConfidence: {}/5\nTrust: {}/5", to_string(d.action),
                     d.reason, d.confidence, d.trust);
}

std::string summary_line(const DecisionRecord& r) {
  return fmt::format("Time {}: {} (moved from {} to {} - {})", r.time_step, r.status, r.position_before,
                     r.position_after, to_string(r.action));
}

}  // namespace pedsim
