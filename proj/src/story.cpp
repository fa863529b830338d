#include "loomcast/story.hpp"

#include <algorithm>

#include "loomcast/errors.hpp"

namespace loomcast {

std::string_view to_string(NarratorMode mode) {
  return mode == NarratorMode::System ? "system" : "user";
}

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::Light:
      return "light";
    case DeviceKind::Fan:
      return "fan";
    case DeviceKind::Speaker:
      return "speaker";
  }
  return "?";
}

std::string_view trigger_type(const Trigger& trigger) {
  struct Visitor {
    std::string_view operator()(const TapTrigger&) const { return "tap"; }
    std::string_view operator()(const KeywordTrigger&) const { return "keyword"; }
    std::string_view operator()(const TouchTrigger&) const { return "touch"; }
  };
  return std::visit(Visitor{}, trigger);
}

const std::string& behavior_target(const Behavior& behavior) {
  struct Visitor {
    const std::string& operator()(const LightSet& b) const { return b.device; }
    const std::string& operator()(const FanSet& b) const { return b.device; }
    const std::string& operator()(const SpeakerSet& b) const { return b.device; }
    const std::string& operator()(const AssetPlace& b) const { return b.asset; }
    const std::string& operator()(const AssetRemove& b) const { return b.asset; }
    const std::string& operator()(const AssetEffect& b) const { return b.asset; }
  };
  return std::visit(Visitor{}, behavior);
}

bool targets_device(const Behavior& behavior) {
  return std::holds_alternative<LightSet>(behavior) || std::holds_alternative<FanSet>(behavior) ||
         std::holds_alternative<SpeakerSet>(behavior);
}

std::string_view behavior_type(const Behavior& behavior) {
  static constexpr std::string_view names[] = {"light", "fan", "speaker", "place", "remove", "asset_effect"};
  return names[behavior.index()];
}

const DeviceDecl* Story::find_device(std::string_view id) const {
  auto it = std::find_if(devices.begin(), devices.end(), [&](const DeviceDecl& d) { return d.id == id; });
  return it == devices.end() ? nullptr : &*it;
}

const AssetDecl* Story::find_asset(std::string_view id) const {
  auto it = std::find_if(assets.begin(), assets.end(), [&](const AssetDecl& a) { return a.id == id; });
  return it == assets.end() ? nullptr : &*it;
}

const Scene& Story::scene(int index) const {
  if (index < -1 || index > last_index()) {
    throw IndexOutOfRange("scene index " + std::to_string(index) + " out of range [-1, " +
                          std::to_string(last_index()) + "]");
  }
  return index == -1 ? initial : steps[static_cast<std::size_t>(index)].scene;
}

Scene& Story::scene(int index) {
  return const_cast<Scene&>(std::as_const(*this).scene(index));
}

}  // namespace loomcast
