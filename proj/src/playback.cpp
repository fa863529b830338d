#include "loomcast/playback.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "loomcast/text.hpp"
#include "loomcast/validate.hpp"

namespace loomcast {

PlaybackSession::PlaybackSession(Story story, std::shared_ptr<DeviceDispatcher> devices, PlaybackOptions options)
    : story_(std::move(story)), devices_(std::move(devices)), options_(std::move(options)) {
  world_ = effective_state(story_, -1);

  opening_.entered_scene = -1;
  for (const auto& d : story_.devices) {
    if (auto state = world_.device(d.id)) opening_.device_commands.push_back(full_command(d.id, *state));
  }
  speak(story_.initial.narration, opening_);
  devices_->submit(opening_.device_commands);
  arm_next();
  opening_.finished = finished();
}

std::int64_t PlaybackSession::now() { return options_.clock ? options_.clock() : events_seen_; }

void PlaybackSession::arm_next() {
  if (finished()) {
    armed_.reset();
    return;
  }
  armed_.emplace(story_.steps[static_cast<std::size_t>(cursor_ + 1)].trigger, world_, story_);
}

std::vector<DeviceCommand> PlaybackSession::in_declaration_order(std::vector<DeviceCommand> commands) const {
  auto rank = [this](const DeviceRef& id) {
    auto it = std::find_if(story_.devices.begin(), story_.devices.end(), [&](const auto& d) { return d.id == id; });
    return it - story_.devices.begin();
  };
  std::stable_sort(commands.begin(), commands.end(),
                   [&](const DeviceCommand& a, const DeviceCommand& b) { return rank(a.target) < rank(b.target); });
  return commands;
}

std::optional<DeviceRef> PlaybackSession::narration_speaker() const {
  std::optional<DeviceRef> fallback;
  for (const auto& d : story_.devices) {
    if (d.kind != DeviceKind::Speaker) continue;
    const DeviceDriver* driver = devices_->registry().find(d.id);
    if (driver != nullptr && driver->can_speak()) return d.id;
    if (!fallback) fallback = d.id;
  }
  return fallback;
}

void PlaybackSession::speak(const std::optional<std::string>& narration, TransitionResult& result) {
  if (story_.narrator_mode != NarratorMode::System || !narration || narration->empty()) return;
  result.narration_to_speak = *narration;
  if (auto speaker = narration_speaker()) {
    result.device_commands.push_back(DeviceCommand{*speaker, SpeakerCommand{{}, *narration}});
  } else {
    diagnostics_.push_back("no speaker declared; narration not spoken");
  }
}

void PlaybackSession::note_missed_cue(const TranscriptEvent& event) {
  const auto tokens = normalize(event.text);
  for (int j = cursor_ + 2; j <= story_.last_index(); ++j) {
    const auto* kw = std::get_if<KeywordTrigger>(&story_.steps[static_cast<std::size_t>(j)].trigger);
    if (kw == nullptr) continue;
    if (contains_run(tokens, normalize(kw->phrase))) {
      diagnostics_.push_back("missed cue: heard keyword '" + kw->phrase + "' of step " + std::to_string(j) +
                             " while step " + std::to_string(cursor_ + 1) + " is armed");
    }
  }
}

std::optional<TransitionResult> PlaybackSession::handle_event(const InputEvent& event) {
  if (finished()) throw SessionFinished("story already finished");
  ++events_seen_;

  if (armed_->feed(event) == FeedResult::Pending) {
    if (const auto* t = std::get_if<TranscriptEvent>(&event)) note_missed_cue(*t);
    return std::nullopt;
  }

  std::string matched;
  if (const auto* kw = std::get_if<KeywordTrigger>(&armed_->trigger())) matched = kw->phrase;
  if (const auto* touch = std::get_if<TouchTrigger>(&armed_->trigger())) matched = touch->target;

  ++cursor_;
  WorldState next = effective_state(story_, cursor_);

  TransitionResult result;
  result.entered_scene = cursor_;
  result.plan = scene_diff(world_, next, options_.animation);
  result.device_commands = in_declaration_order(result.plan.device_commands());
  speak(story_.steps[static_cast<std::size_t>(cursor_)].scene.narration, result);
  devices_->submit(result.device_commands);

  world_ = std::move(next);
  log_.push_back({now(), cursor_, std::string(event_kind(event)), matched});
  arm_next();
  result.finished = finished();
  return result;
}

TransitionResult PlaybackSession::goto_scene(int index) {
  WorldState next = effective_state(story_, index);
  ++events_seen_;

  TransitionResult result;
  result.entered_scene = index;
  for (const auto& d : story_.devices) {
    if (auto state = next.device(d.id)) result.device_commands.push_back(full_command(d.id, *state));
  }
  devices_->submit(result.device_commands);

  cursor_ = index;
  world_ = std::move(next);
  log_.push_back({now(), cursor_, "goto", ""});
  arm_next();
  result.finished = finished();
  return result;
}

std::vector<std::string> PlaybackSession::take_diagnostics() {
  auto out = std::exchange(diagnostics_, {});
  for (auto& d : devices_->take_diagnostics()) out.push_back(std::move(d));
  return out;
}

std::string PlaybackSession::export_log() const {
  std::string out;
  for (const auto& r : log_) {
    nlohmann::ordered_json j{{"timestamp", r.timestamp}, {"step", r.step}, {"event", r.event_kind}, {"matched", r.matched}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

PlaybackSession start_session(Story story, DeviceRegistry drivers, PlaybackOptions options) {
  auto issues = validate_story(story);
  if (has_errors(issues)) {
    std::string msg = "story has validation errors";
    for (const auto& i : issues) {
      if (i.severity == Severity::Error) msg += "; " + format_issue(i);
    }
    throw InvalidStory(msg);
  }
  drivers.ensure_bound(story);
  auto dispatcher = std::make_shared<DeviceDispatcher>(std::move(drivers));
  return PlaybackSession(std::move(story), std::move(dispatcher), std::move(options));
}

}  // namespace loomcast
