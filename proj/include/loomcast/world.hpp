#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include "loomcast/story.hpp"

namespace loomcast {

struct LightState {
  bool on = true;
  int brightness_pct = 100;
  int hue_deg = 60;
  std::optional<std::string> effect;

  bool operator==(const LightState&) const = default;
};

struct FanState {
  bool on = false;
  int intensity = 0;

  bool operator==(const FanState&) const = default;
};

struct SpeakerState {
  bool on = true;
  int volume_pct = 50;
  std::optional<std::string> sound;

  bool operator==(const SpeakerState&) const = default;
};

/// `position` is always the resolved room position, anchors included.
struct AssetState {
  bool present = false;
  Vec3 position;
  std::optional<DeviceRef> anchor;
  std::optional<std::string> effect;

  bool operator==(const AssetState&) const = default;
};

using DeviceState = std::variant<LightState, FanState, SpeakerState>;

struct WorldState {
  std::map<DeviceRef, LightState> lights;
  std::map<DeviceRef, FanState> fans;
  std::map<DeviceRef, SpeakerState> speakers;
  std::map<AssetRef, AssetState> assets;

  std::optional<DeviceState> device(const DeviceRef& id) const;
  bool operator==(const WorldState&) const = default;
};

struct SpeakerCommand {
  SpeakerFields set;
  /// Text to speak; only honored by speakers that can talk.
  std::optional<std::string> say;

  bool empty() const { return set.empty() && !say; }
  bool operator==(const SpeakerCommand&) const = default;
};

using CommandPayload = std::variant<LightFields, FanFields, SpeakerCommand>;

struct DeviceCommand {
  DeviceRef target;
  CommandPayload payload;

  bool operator==(const DeviceCommand&) const = default;
};

/// Single-device update rules. These are the same rules the simulated
/// drivers use: brightness 0 or intensity 0 switch the device off, turning a
/// device on at level 0 restores a usable level, and a speaker that is off
/// plays nothing.
void apply_fields(LightState& state, const LightFields& set);
void apply_fields(FanState& state, const FanFields& set);
void apply_fields(SpeakerState& state, const SpeakerFields& set);

/// State of every declared device and asset before the initial scene.
WorldState default_world(const Story& story);

/// Applies one behavior. Unresolved references are skipped and reported
/// through the return value.
bool apply_behavior(WorldState& world, const Behavior& behavior, const Story& story);
void apply_scene(WorldState& world, const Scene& scene, const Story& story);

/// Applies a device command to the matching device entry.
bool apply_command(WorldState& world, const DeviceCommand& command);

/// Fold of defaults, the initial scene and steps[0..=scene_index].
/// scene_index -1 means the initial scene only. Throws IndexOutOfRange.
WorldState effective_state(const Story& story, int scene_index);

}  // namespace loomcast
