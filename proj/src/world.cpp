#include "loomcast/world.hpp"

#include "loomcast/effects.hpp"

namespace loomcast {
namespace {

std::optional<std::string> effect_value(const std::string& name) {
  if (name == kNone) return std::nullopt;
  return name;
}

}  // namespace

std::optional<DeviceState> WorldState::device(const DeviceRef& id) const {
  if (auto it = lights.find(id); it != lights.end()) return it->second;
  if (auto it = fans.find(id); it != fans.end()) return it->second;
  if (auto it = speakers.find(id); it != speakers.end()) return it->second;
  return std::nullopt;
}

void apply_fields(LightState& state, const LightFields& set) {
  if (set.brightness_pct) state.brightness_pct = *set.brightness_pct;
  if (set.on) {
    state.on = *set.on;
  } else if (set.brightness_pct) {
    state.on = *set.brightness_pct > 0;
  }
  if (state.brightness_pct == 0) {
    if (set.on.value_or(false) && !set.brightness_pct) {
      state.brightness_pct = 100;
    } else {
      state.on = false;
    }
  }
  if (set.hue_deg) state.hue_deg = *set.hue_deg;
  if (set.effect) state.effect = effect_value(*set.effect);
}

void apply_fields(FanState& state, const FanFields& set) {
  if (set.intensity) state.intensity = *set.intensity;
  if (set.on) {
    state.on = *set.on;
  } else if (set.intensity) {
    state.on = *set.intensity > 0;
  }
  if (state.intensity == 0) {
    if (set.on.value_or(false) && !set.intensity) {
      state.intensity = 1;
    } else {
      state.on = false;
    }
  }
}

void apply_fields(SpeakerState& state, const SpeakerFields& set) {
  if (set.volume_pct) state.volume_pct = *set.volume_pct;
  if (set.sound) {
    state.sound = effect_value(*set.sound);
    if (state.sound && !set.on) state.on = true;
  }
  if (set.on) state.on = *set.on;
  if (!state.on) state.sound.reset();
}

WorldState default_world(const Story& story) {
  WorldState world;
  for (const auto& device : story.devices) {
    switch (device.kind) {
      case DeviceKind::Light:
        world.lights[device.id] = LightState{};
        break;
      case DeviceKind::Fan:
        world.fans[device.id] = FanState{};
        break;
      case DeviceKind::Speaker:
        world.speakers[device.id] = SpeakerState{};
        break;
    }
  }
  for (const auto& asset : story.assets) {
    world.assets[asset.id] = AssetState{false, asset.position, std::nullopt, std::nullopt};
  }
  return world;
}

bool apply_behavior(WorldState& world, const Behavior& behavior, const Story& story) {
  struct Visitor {
    WorldState& world;
    const Story& story;

    bool operator()(const LightSet& b) const {
      auto it = world.lights.find(b.device);
      if (it == world.lights.end()) return false;
      apply_fields(it->second, b.set);
      return true;
    }
    bool operator()(const FanSet& b) const {
      auto it = world.fans.find(b.device);
      if (it == world.fans.end()) return false;
      apply_fields(it->second, b.set);
      return true;
    }
    bool operator()(const SpeakerSet& b) const {
      auto it = world.speakers.find(b.device);
      if (it == world.speakers.end()) return false;
      apply_fields(it->second, b.set);
      return true;
    }
    bool operator()(const AssetPlace& b) const {
      auto it = world.assets.find(b.asset);
      if (it == world.assets.end()) return false;
      Vec3 position = b.position;
      if (b.anchor) {
        const DeviceDecl* anchor = story.find_device(*b.anchor);
        if (anchor == nullptr) return false;
        position = anchor->position + b.position;
      }
      it->second.present = true;
      it->second.position = position;
      it->second.anchor = b.anchor;
      return true;
    }
    bool operator()(const AssetRemove& b) const {
      auto it = world.assets.find(b.asset);
      if (it == world.assets.end()) return false;
      it->second.present = false;
      return true;
    }
    bool operator()(const AssetEffect& b) const {
      auto it = world.assets.find(b.asset);
      if (it == world.assets.end()) return false;
      it->second.effect = effect_value(b.effect);
      return true;
    }
  };
  return std::visit(Visitor{world, story}, behavior);
}

void apply_scene(WorldState& world, const Scene& scene, const Story& story) {
  for (const auto& behavior : scene.behaviors) apply_behavior(world, behavior, story);
}

bool apply_command(WorldState& world, const DeviceCommand& command) {
  struct Visitor {
    WorldState& world;
    const DeviceRef& id;

    bool operator()(const LightFields& set) const {
      auto it = world.lights.find(id);
      if (it == world.lights.end()) return false;
      apply_fields(it->second, set);
      return true;
    }
    bool operator()(const FanFields& set) const {
      auto it = world.fans.find(id);
      if (it == world.fans.end()) return false;
      apply_fields(it->second, set);
      return true;
    }
    bool operator()(const SpeakerCommand& cmd) const {
      auto it = world.speakers.find(id);
      if (it == world.speakers.end()) return false;
      apply_fields(it->second, cmd.set);
      return true;
    }
  };
  return std::visit(Visitor{world, command.target}, command.payload);
}

WorldState effective_state(const Story& story, int scene_index) {
  story.scene(scene_index);  // range check
  WorldState world = default_world(story);
  apply_scene(world, story.initial, story);
  for (int i = 0; i <= scene_index; ++i) {
    apply_scene(world, story.steps[static_cast<std::size_t>(i)].scene, story);
  }
  return world;
}

}  // namespace loomcast
