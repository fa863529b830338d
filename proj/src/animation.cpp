#include "loomcast/animation.hpp"

#include "loomcast/effects.hpp"
#include "loomcast/errors.hpp"

namespace loomcast {
namespace {

template <typename Map>
bool same_keys(const Map& a, const Map& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
  }
  return true;
}

template <typename T>
void set_if_changed(std::optional<T>& field, const T& prev, const T& next) {
  if (prev != next) field = next;
}

void set_effect_if_changed(std::optional<std::string>& field, const std::optional<std::string>& prev,
                           const std::optional<std::string>& next) {
  if (prev != next) field = next.value_or(std::string(kNone));
}

LightFields light_delta(const LightState& prev, const LightState& next) {
  LightFields f;
  set_if_changed(f.on, prev.on, next.on);
  set_if_changed(f.brightness_pct, prev.brightness_pct, next.brightness_pct);
  set_if_changed(f.hue_deg, prev.hue_deg, next.hue_deg);
  set_effect_if_changed(f.effect, prev.effect, next.effect);
  if (f.brightness_pct && !f.on && (next.brightness_pct > 0) != next.on) f.on = next.on;
  return f;
}

FanFields fan_delta(const FanState& prev, const FanState& next) {
  FanFields f;
  set_if_changed(f.on, prev.on, next.on);
  set_if_changed(f.intensity, prev.intensity, next.intensity);
  if (f.intensity && !f.on && (next.intensity > 0) != next.on) f.on = next.on;
  return f;
}

SpeakerFields speaker_delta(const SpeakerState& prev, const SpeakerState& next) {
  SpeakerFields f;
  set_if_changed(f.on, prev.on, next.on);
  set_if_changed(f.volume_pct, prev.volume_pct, next.volume_pct);
  set_effect_if_changed(f.sound, prev.sound, next.sound);
  return f;
}

}  // namespace

std::vector<DeviceCommand> AnimationPlan::device_commands() const {
  std::vector<DeviceCommand> out;
  for (const auto& effect : effects) {
    if (const auto* cue = std::get_if<DeviceCue>(&effect)) out.push_back(cue->command);
  }
  return out;
}

std::optional<DeviceCommand> device_delta(const DeviceRef& id, const DeviceState& prev, const DeviceState& next) {
  if (prev.index() != next.index()) {
    throw MismatchedDeclarations("device " + id + " changed kind");
  }
  if (prev == next) return std::nullopt;
  if (const auto* p = std::get_if<LightState>(&prev)) {
    return DeviceCommand{id, light_delta(*p, std::get<LightState>(next))};
  }
  if (const auto* p = std::get_if<FanState>(&prev)) {
    return DeviceCommand{id, fan_delta(*p, std::get<FanState>(next))};
  }
  return DeviceCommand{id, SpeakerCommand{speaker_delta(std::get<SpeakerState>(prev), std::get<SpeakerState>(next)),
                                          std::nullopt}};
}

DeviceCommand full_command(const DeviceRef& id, const DeviceState& state) {
  if (const auto* s = std::get_if<LightState>(&state)) {
    return {id, LightFields{s->on, s->brightness_pct, s->hue_deg, s->effect.value_or(std::string(kNone))}};
  }
  if (const auto* s = std::get_if<FanState>(&state)) {
    return {id, FanFields{s->on, s->intensity}};
  }
  const auto& s = std::get<SpeakerState>(state);
  return {id, SpeakerCommand{SpeakerFields{s.on, s.volume_pct, s.sound.value_or(std::string(kNone))}, std::nullopt}};
}

AnimationPlan scene_diff(const WorldState& prev, const WorldState& next, const AnimationDefaults& defaults) {
  if (!same_keys(prev.lights, next.lights) || !same_keys(prev.fans, next.fans) ||
      !same_keys(prev.speakers, next.speakers) || !same_keys(prev.assets, next.assets)) {
    throw MismatchedDeclarations("world states resolve different declarations");
  }

  AnimationPlan plan;
  auto cue_devices = [&](const auto& before, const auto& after) {
    for (auto ib = before.begin(), ia = after.begin(); ib != before.end(); ++ib, ++ia) {
      if (auto cmd = device_delta(ib->first, ib->second, ia->second)) plan.effects.emplace_back(DeviceCue{*cmd});
    }
  };
  cue_devices(prev.lights, next.lights);
  cue_devices(prev.fans, next.fans);
  cue_devices(prev.speakers, next.speakers);

  for (auto ip = prev.assets.begin(), in = next.assets.begin(); ip != prev.assets.end(); ++ip, ++in) {
    const AssetRef& id = ip->first;
    const AssetState& a = ip->second;
    const AssetState& b = in->second;
    if (a == b) continue;
    if (!a.present && b.present) {
      plan.effects.emplace_back(FadeIn{id, defaults.fade_s, b});
    } else if (a.present && !b.present) {
      plan.effects.emplace_back(FadeOut{id, defaults.fade_s, b});
    } else if (a.present && a.position != b.position) {
      plan.effects.emplace_back(Translate{id, a.position, b.position, defaults.translate_s, b});
    } else {
      plan.effects.emplace_back(AssetCue{id, b});
    }
  }
  return plan;
}

void apply_plan(WorldState& world, const AnimationPlan& plan) {
  struct Visitor {
    WorldState& world;
    void operator()(const FadeIn& e) const { world.assets[e.asset] = e.end; }
    void operator()(const FadeOut& e) const { world.assets[e.asset] = e.end; }
    void operator()(const Translate& e) const { world.assets[e.asset] = e.end; }
    void operator()(const AssetCue& e) const { world.assets[e.asset] = e.end; }
    void operator()(const DeviceCue& e) const { apply_command(world, e.command); }
  };
  for (const auto& effect : plan.effects) std::visit(Visitor{world}, effect);
}

}  // namespace loomcast
