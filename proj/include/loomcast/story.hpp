#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "loomcast/geometry.hpp"

namespace loomcast {

using DeviceRef = std::string;
using AssetRef = std::string;

enum class NarratorMode { User, System };
enum class DeviceKind { Light, Fan, Speaker };

std::string_view to_string(NarratorMode mode);
std::string_view to_string(DeviceKind kind);

struct DeviceDecl {
  DeviceRef id;
  DeviceKind kind = DeviceKind::Light;
  std::string name;
  Vec3 position;

  bool operator==(const DeviceDecl&) const = default;
};

struct AssetDecl {
  AssetRef id;
  std::string model;
  std::string name;
  Vec3 position;
  double half_extent_m = 0.1;

  bool operator==(const AssetDecl&) const = default;
};

// Triggers

inline constexpr double kDefaultTouchThreshold = 0.05;

struct TapTrigger {
  bool operator==(const TapTrigger&) const = default;
};

struct KeywordTrigger {
  std::string phrase;
  bool operator==(const KeywordTrigger&) const = default;
};

struct TouchTrigger {
  AssetRef target;
  double threshold_m = kDefaultTouchThreshold;
  bool operator==(const TouchTrigger&) const = default;
};

using Trigger = std::variant<TapTrigger, KeywordTrigger, TouchTrigger>;

std::string_view trigger_type(const Trigger& trigger);

// Device field sets. Absent fields mean "unchanged". They are shared by
// scene behaviors and by the commands sent to drivers.

struct LightFields {
  std::optional<bool> on;
  std::optional<int> brightness_pct;
  std::optional<int> hue_deg;
  std::optional<std::string> effect;

  bool empty() const { return !on && !brightness_pct && !hue_deg && !effect; }
  bool operator==(const LightFields&) const = default;
};

struct FanFields {
  std::optional<bool> on;
  std::optional<int> intensity;

  bool empty() const { return !on && !intensity; }
  bool operator==(const FanFields&) const = default;
};

struct SpeakerFields {
  std::optional<bool> on;
  std::optional<int> volume_pct;
  std::optional<std::string> sound;

  bool empty() const { return !on && !volume_pct && !sound; }
  bool operator==(const SpeakerFields&) const = default;
};

inline constexpr int kMaxFanIntensity = 3;

// Behaviors

struct LightSet {
  DeviceRef device;
  LightFields set;
  bool operator==(const LightSet&) const = default;
};

struct FanSet {
  DeviceRef device;
  FanFields set;
  bool operator==(const FanSet&) const = default;
};

struct SpeakerSet {
  DeviceRef device;
  SpeakerFields set;
  bool operator==(const SpeakerSet&) const = default;
};

/// With an anchor, `position` is an offset from the anchor device.
struct AssetPlace {
  AssetRef asset;
  Vec3 position;
  std::optional<DeviceRef> anchor;
  bool operator==(const AssetPlace&) const = default;
};

struct AssetRemove {
  AssetRef asset;
  bool operator==(const AssetRemove&) const = default;
};

struct AssetEffect {
  AssetRef asset;
  std::string effect;
  bool operator==(const AssetEffect&) const = default;
};

using Behavior = std::variant<LightSet, FanSet, SpeakerSet, AssetPlace, AssetRemove, AssetEffect>;

/// Device or asset id the behavior overrides.
const std::string& behavior_target(const Behavior& behavior);
bool targets_device(const Behavior& behavior);
std::string_view behavior_type(const Behavior& behavior);

struct Scene {
  std::vector<Behavior> behaviors;
  std::optional<std::string> narration;

  bool operator==(const Scene&) const = default;
};

struct Step {
  Trigger trigger;
  Scene scene;

  bool operator==(const Step&) const = default;
};

struct Story {
  std::string id;
  std::string title;
  NarratorMode narrator_mode = NarratorMode::User;
  /// Actor roles players can claim during co-located playback.
  std::vector<std::string> actors;
  std::vector<DeviceDecl> devices;
  std::vector<AssetDecl> assets;
  Scene initial;
  std::vector<Step> steps;

  const DeviceDecl* find_device(std::string_view id) const;
  const AssetDecl* find_asset(std::string_view id) const;
  int last_index() const { return static_cast<int>(steps.size()) - 1; }

  /// Scene by index; -1 is the initial scene.
  const Scene& scene(int index) const;
  Scene& scene(int index);

  bool operator==(const Story&) const = default;
};

}  // namespace loomcast
