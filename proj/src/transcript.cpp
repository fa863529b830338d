#include "loomcast/transcript.hpp"

#include <charconv>
#include <cmath>

namespace loomcast {
namespace {

constexpr std::string_view kTouchDirective = "@touch";

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

std::vector<std::string_view> fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    i = s.find_first_not_of(" \t", i);
    if (i == std::string_view::npos) break;
    std::size_t end = s.find_first_of(" \t", i);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(i, end - i));
    i = end;
  }
  return out;
}

double coordinate(std::string_view s, std::size_t line_number) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw TranscriptError("line " + std::to_string(line_number) + ": bad coordinate '" + std::string(s) + "'",
                          line_number);
  }
  return v;
}

}  // namespace

InputEvent parse_transcript_line(std::string_view line, const ClientId& source, std::size_t line_number) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (is_blank(line)) return TapEvent{source};

  auto parts = fields(line);
  if (parts.front() == kTouchDirective) {
    if (parts.size() != 4) {
      throw TranscriptError("line " + std::to_string(line_number) + ": expected '@touch x y z'", line_number);
    }
    Vec3 p{coordinate(parts[1], line_number), coordinate(parts[2], line_number), coordinate(parts[3], line_number)};
    return TouchEvent{p, source};
  }
  return TranscriptEvent{std::string(line), source};
}

std::vector<InputEvent> parse_transcript(std::istream& in, const ClientId& source) {
  std::vector<InputEvent> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) events.push_back(parse_transcript_line(line, source, ++n));
  return events;
}

}  // namespace loomcast
