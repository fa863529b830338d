#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "loomcast/errors.hpp"
#include "loomcast/story.hpp"
#include "loomcast/validate.hpp"

namespace loomcast {

using ojson = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kStoryExtension = ".story";
inline constexpr std::string_view kStoryMimeType = "application/x-loomcast-story+json";

struct ParseOptions {
  /// Strict rejects unknown keys; lenient reports them as warnings.
  bool strict = true;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& message)
      : Error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class SemanticError : public Error {
 public:
  explicit SemanticError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

struct ParsedStory {
  Story story;
  /// Warnings from validation (and unknown keys in lenient mode).
  std::vector<ValidationIssue> issues;
};

/// Parses and validates a story document. Validation errors throw
/// SemanticError; warnings are returned with the story.
ParsedStory parse_story(std::string_view text, const ParseOptions& options = {});

/// Canonical document text. Throws InvalidStory if validation finds errors.
std::string serialize_story(const Story& story);

ParsedStory load_story_file(const std::filesystem::path& path, const ParseOptions& options = {});

/// Schema-level conversion without semantic validation. Unknown keys go to
/// `issues` in lenient mode.
Story story_from_json(const ojson& doc, const ParseOptions& options, std::vector<ValidationIssue>& issues);
ojson story_to_json(const Story& story);

ojson trigger_to_json(const Trigger& trigger);
Trigger trigger_from_json(const ojson& j, const std::string& path = "trigger");
ojson behavior_to_json(const Behavior& behavior);
Behavior behavior_from_json(const ojson& j, const std::string& path = "behavior");
ojson vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const ojson& j, const std::string& path = "position");

/// Byte offset to 1-based line and column.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset);

}  // namespace loomcast
