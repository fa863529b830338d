#pragma once

#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "loomcast/errors.hpp"
#include "loomcast/story.hpp"
#include "loomcast/world.hpp"

namespace loomcast {

using ClientId = std::string;

struct TranscriptEvent {
  std::string text;
  ClientId source;
  bool operator==(const TranscriptEvent&) const = default;
};

struct TapEvent {
  ClientId source;
  bool operator==(const TapEvent&) const = default;
};

struct TouchEvent {
  Vec3 position;
  ClientId source;
  bool operator==(const TouchEvent&) const = default;
};

using InputEvent = std::variant<TranscriptEvent, TapEvent, TouchEvent>;

std::string_view event_kind(const InputEvent& event);
const ClientId& event_source(const InputEvent& event);

class TouchTargetAbsent : public Error {
 public:
  using Error::Error;
};

enum class FeedResult { Pending, Fired };

/// The one trigger currently eligible to fire.
class ArmedTrigger {
 public:
  /// Throws TouchTargetAbsent when a touch target is not visible in
  /// `predecessor`. `story` supplies asset half extents.
  ArmedTrigger(Trigger trigger, const WorldState& predecessor, const Story& story);

  const Trigger& trigger() const { return trigger_; }
  bool fired() const { return fired_; }

  /// Keyword only: phrase tokens and the rolling window of recent tokens.
  const std::vector<std::string>& phrase_tokens() const { return phrase_; }
  const std::deque<std::string>& window() const { return window_; }
  std::size_t window_capacity() const { return phrase_.size(); }

  /// Touch only: target bounds before the threshold is added.
  const std::optional<Box>& target_bounds() const { return bounds_; }

  /// Feeds one event. Once fired, further events return Fired unchanged.
  FeedResult feed(const InputEvent& event);

  /// Keyword only: number of tokens consumed from the last transcript before
  /// the match completed (0 when not fired by a transcript).
  std::size_t tokens_used() const { return tokens_used_; }

 private:
  FeedResult feed_tokens(const std::vector<std::string>& tokens);

  Trigger trigger_;
  std::vector<std::string> phrase_;
  std::deque<std::string> window_;
  std::optional<Box> bounds_;
  double threshold_m_ = 0.0;
  bool fired_ = false;
  std::size_t tokens_used_ = 0;
};

}  // namespace loomcast
