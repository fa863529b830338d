#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "loomcast/errors.hpp"
#include "loomcast/trigger.hpp"

namespace loomcast {

class TranscriptError : public Error {
 public:
  TranscriptError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One transcript line: an utterance, a blank line for a tap, or
/// `@touch x y z` for a touch at a room position.
InputEvent parse_transcript_line(std::string_view line, const ClientId& source, std::size_t line_number = 0);

std::vector<InputEvent> parse_transcript(std::istream& in, const ClientId& source);

}  // namespace loomcast
