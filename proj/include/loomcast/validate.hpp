#pragma once

#include <string>
#include <vector>

#include "loomcast/effects.hpp"
#include "loomcast/story.hpp"

namespace loomcast {

enum class Severity { Error, Warning };

/// Machine-readable issue kinds.
enum class IssueCode {
  DuplicateId,
  UnknownDevice,
  UnknownAsset,
  WrongDeviceKind,
  OutOfRange,
  UnknownEffect,
  EmptyBehavior,
  ConflictingFields,
  DuplicateTarget,
  NonFinite,
  EmptyKeyword,
  BadThreshold,
  UnplacedTouchTarget,
  TriggerMustBeTap,
  MissingNarration,
  DuplicateKeyword,
  EmptyStory,
  UnknownKey,
};

std::string_view to_string(IssueCode code);

struct ValidationIssue {
  /// -1 is the initial scene; story-level issues also use -1.
  int step = -1;
  Severity severity = Severity::Error;
  IssueCode code = IssueCode::DuplicateId;
  /// Document path of the offending element, e.g. "steps[2].trigger".
  std::string path;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

std::string format_issue(const ValidationIssue& issue);
bool has_errors(const std::vector<ValidationIssue>& issues);

std::vector<ValidationIssue> validate_story(const Story& story,
                                            const EffectRegistry& registry = EffectRegistry::builtin());

}  // namespace loomcast
