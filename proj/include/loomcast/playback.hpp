#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loomcast/animation.hpp"
#include "loomcast/dispatcher.hpp"
#include "loomcast/errors.hpp"
#include "loomcast/story.hpp"
#include "loomcast/trigger.hpp"
#include "loomcast/world.hpp"

namespace loomcast {

class SessionFinished : public Error {
 public:
  using Error::Error;
};

struct TransitionRecord {
  std::int64_t timestamp = 0;
  int step = 0;
  /// "transcript", "tap", "touch" or "goto".
  std::string event_kind;
  /// Keyword phrase or touch target that fired; empty otherwise.
  std::string matched;

  bool operator==(const TransitionRecord&) const = default;
};

struct TransitionResult {
  int entered_scene = -1;
  AnimationPlan plan;
  std::vector<DeviceCommand> device_commands;
  std::optional<std::string> narration_to_speak;
  bool finished = false;

  bool operator==(const TransitionResult&) const = default;
};

struct PlaybackOptions {
  AnimationDefaults animation;
  /// Returns the timestamp for log records. Defaults to a logical clock that
  /// counts handled events, which keeps logs reproducible.
  std::function<std::int64_t()> clock;
};

/// Plays one story. Owned by a single event loop; not thread safe.
class PlaybackSession {
 public:
  PlaybackSession(Story story, std::shared_ptr<DeviceDispatcher> devices, PlaybackOptions options = {});

  const Story& story() const { return story_; }
  int cursor() const { return cursor_; }
  const WorldState& world() const { return world_; }
  bool finished() const { return cursor_ == story_.last_index(); }
  const ArmedTrigger* armed() const { return armed_ ? &*armed_ : nullptr; }
  const std::vector<TransitionRecord>& log() const { return log_; }
  DeviceDispatcher& devices() { return *devices_; }

  /// What start-up issued: initial device commands and opening narration.
  const TransitionResult& opening() const { return opening_; }

  /// Feeds an event to the armed trigger. Returns nullopt when it did not
  /// fire. Throws SessionFinished after the last scene.
  std::optional<TransitionResult> handle_event(const InputEvent& event);

  /// Jumps to a scene without a trigger and without animations.
  /// Throws IndexOutOfRange.
  TransitionResult goto_scene(int index);

  /// Missed cues and device failures since the last call.
  std::vector<std::string> take_diagnostics();

  /// Log as newline-delimited JSON records.
  std::string export_log() const;

 private:
  void arm_next();
  std::vector<DeviceCommand> in_declaration_order(std::vector<DeviceCommand> commands) const;
  std::optional<DeviceRef> narration_speaker() const;
  void speak(const std::optional<std::string>& narration, TransitionResult& result);
  void note_missed_cue(const TranscriptEvent& event);
  std::int64_t now();

  Story story_;
  std::shared_ptr<DeviceDispatcher> devices_;
  PlaybackOptions options_;
  int cursor_ = -1;
  std::optional<ArmedTrigger> armed_;
  WorldState world_;
  std::vector<TransitionRecord> log_;
  std::vector<std::string> diagnostics_;
  TransitionResult opening_;
  std::int64_t events_seen_ = 0;
};

/// Validates the story, binds drivers (falling back to simulated ones when
/// the registry allows it), issues the initial scene's device commands and
/// arms the first trigger. Throws InvalidStory or DriverUnavailable.
PlaybackSession start_session(Story story, DeviceRegistry drivers, PlaybackOptions options = {});

}  // namespace loomcast
