#pragma once

#include <variant>
#include <vector>

#include "loomcast/world.hpp"

namespace loomcast {

struct AnimationDefaults {
  double fade_s = 1.0;
  double translate_s = 1.0;
};

// Every asset effect carries the asset's end state so a client can apply the
// plan without knowing the story.

struct FadeIn {
  AssetRef asset;
  double duration_s = 0.0;
  AssetState end;
  bool operator==(const FadeIn&) const = default;
};

struct FadeOut {
  AssetRef asset;
  double duration_s = 0.0;
  AssetState end;
  bool operator==(const FadeOut&) const = default;
};

struct Translate {
  AssetRef asset;
  Vec3 from;
  Vec3 to;
  double duration_s = 0.0;
  AssetState end;
  bool operator==(const Translate&) const = default;
};

/// Asset change with no position or visibility change (effect, anchor).
struct AssetCue {
  AssetRef asset;
  AssetState end;
  bool operator==(const AssetCue&) const = default;
};

/// Immediate device change.
struct DeviceCue {
  DeviceCommand command;
  bool operator==(const DeviceCue&) const = default;
};

using AnimationEffect = std::variant<FadeIn, FadeOut, Translate, AssetCue, DeviceCue>;

struct AnimationPlan {
  std::vector<AnimationEffect> effects;

  bool empty() const { return effects.empty(); }
  std::vector<DeviceCommand> device_commands() const;
  bool operator==(const AnimationPlan&) const = default;
};

/// Transition effects between two states over the same declarations.
/// Device cues come first in device-id order, then asset effects in asset-id
/// order. Throws MismatchedDeclarations.
AnimationPlan scene_diff(const WorldState& prev, const WorldState& next,
                         const AnimationDefaults& defaults = {});

/// Command that moves a device from `prev` to `next`, listing only the fields
/// that differ. Returns nullopt when nothing changed.
std::optional<DeviceCommand> device_delta(const DeviceRef& id, const DeviceState& prev,
                                          const DeviceState& next);

/// Command carrying every field of `state`.
DeviceCommand full_command(const DeviceRef& id, const DeviceState& state);

/// Applies the plan's end states to `world`.
void apply_plan(WorldState& world, const AnimationPlan& plan);

}  // namespace loomcast
