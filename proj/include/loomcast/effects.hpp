#pragma once

#include <set>
#include <string>
#include <string_view>

namespace loomcast {

/// Reserved name that clears an effect or stops a sound.
inline constexpr std::string_view kNone = "none";

/// Names a story may use for light effects, speaker sounds and asset effects.
/// How an effect is rendered is up to each driver.
struct EffectRegistry {
  std::set<std::string, std::less<>> light_effects;
  std::set<std::string, std::less<>> speaker_sounds;
  std::set<std::string, std::less<>> asset_effects;

  static const EffectRegistry& builtin();

  bool has_light_effect(std::string_view name) const {
    return name == kNone || light_effects.contains(name);
  }
  bool has_sound(std::string_view name) const { return name == kNone || speaker_sounds.contains(name); }
  bool has_asset_effect(std::string_view name) const {
    return name == kNone || asset_effects.contains(name);
  }
};

inline const EffectRegistry& EffectRegistry::builtin() {
  static const EffectRegistry registry{
      {"flickering", "pulse"},
      {"lullaby", "thunder", "wind"},
      {"glow", "sparkle", "spin"},
  };
  return registry;
}

}  // namespace loomcast
