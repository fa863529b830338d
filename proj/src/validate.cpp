#include "loomcast/validate.hpp"

#include <cmath>
#include <map>
#include <set>

#include "loomcast/text.hpp"
#include "loomcast/world.hpp"

namespace loomcast {
namespace {

class Validator {
 public:
  Validator(const Story& story, const EffectRegistry& registry) : story_(story), registry_(registry) {}

  std::vector<ValidationIssue> run() {
    check_declarations();
    if (story_.steps.empty()) {
      add(-1, Severity::Warning, IssueCode::EmptyStory, "steps", "empty story");
    }

    WorldState world = default_world(story_);
    check_scene(-1, story_.initial, "initial");
    apply_scene(world, story_.initial, story_);

    std::map<std::string, int> keyword_owner;
    for (std::size_t k = 0; k < story_.steps.size(); ++k) {
      const int step = static_cast<int>(k);
      const Step& s = story_.steps[k];
      const std::string base = "steps[" + std::to_string(k) + "]";
      check_trigger(step, s.trigger, world, base + ".trigger", keyword_owner);
      check_scene(step, s.scene, base + ".scene");
      apply_scene(world, s.scene, story_);
    }
    return std::move(issues_);
  }

 private:
  void add(int step, Severity severity, IssueCode code, std::string path, std::string message) {
    issues_.push_back({step, severity, code, std::move(path), std::move(message)});
  }

  void check_declarations() {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < story_.devices.size(); ++i) {
      const auto& d = story_.devices[i];
      const std::string path = "devices[" + std::to_string(i) + "]";
      if (d.id.empty() || !ids.insert(d.id).second) {
        add(-1, Severity::Error, IssueCode::DuplicateId, path + ".id", "duplicate or empty device id '" + d.id + "'");
      }
      if (!is_finite(d.position)) {
        add(-1, Severity::Error, IssueCode::NonFinite, path + ".position", "device position must be finite");
      }
    }
    for (std::size_t i = 0; i < story_.assets.size(); ++i) {
      const auto& a = story_.assets[i];
      const std::string path = "assets[" + std::to_string(i) + "]";
      if (a.id.empty() || !ids.insert(a.id).second) {
        add(-1, Severity::Error, IssueCode::DuplicateId, path + ".id", "duplicate or empty asset id '" + a.id + "'");
      }
      if (!is_finite(a.position)) {
        add(-1, Severity::Error, IssueCode::NonFinite, path + ".position", "asset position must be finite");
      }
      if (!(a.half_extent_m > 0.0) || !std::isfinite(a.half_extent_m)) {
        add(-1, Severity::Error, IssueCode::OutOfRange, path + ".half_extent_m", "half extent must be positive");
      }
    }
  }

  void check_trigger(int step, const Trigger& trigger, const WorldState& before, const std::string& path,
                     std::map<std::string, int>& keyword_owner) {
    if (story_.narrator_mode == NarratorMode::System && !std::holds_alternative<TapTrigger>(trigger)) {
      add(step, Severity::Error, IssueCode::TriggerMustBeTap, path,
          "trigger must be tap in a system-narrated story");
    }
    if (const auto* kw = std::get_if<KeywordTrigger>(&trigger)) {
      const auto tokens = normalize(kw->phrase);
      if (tokens.empty()) {
        add(step, Severity::Error, IssueCode::EmptyKeyword, path + ".phrase", "keyword phrase is empty");
        return;
      }
      const std::string key = join_tokens(tokens);
      auto [it, inserted] = keyword_owner.emplace(key, step);
      if (!inserted) {
        add(step, Severity::Warning, IssueCode::DuplicateKeyword, path + ".phrase",
            "keyword '" + key + "' also used by step " + std::to_string(it->second));
      }
    } else if (const auto* touch = std::get_if<TouchTrigger>(&trigger)) {
      if (!(touch->threshold_m > 0.0) || !std::isfinite(touch->threshold_m)) {
        add(step, Severity::Error, IssueCode::BadThreshold, path + ".threshold_m", "touch threshold must be > 0");
      }
      if (story_.find_asset(touch->target) == nullptr) {
        add(step, Severity::Error, IssueCode::UnknownAsset, path + ".target",
            "unknown touch target '" + touch->target + "'");
      } else if (!before.assets.at(touch->target).present) {
        add(step, Severity::Error, IssueCode::UnplacedTouchTarget, path + ".target",
            "unplaced touch target '" + touch->target + "'");
      }
    }
  }

  void check_scene(int step, const Scene& scene, const std::string& path) {
    if (story_.narrator_mode == NarratorMode::System && step >= 0 &&
        (!scene.narration || scene.narration->empty())) {
      add(step, Severity::Error, IssueCode::MissingNarration, path + ".narration",
          "system-narrated scene needs narration");
    }
    std::set<std::string> targets;
    for (std::size_t i = 0; i < scene.behaviors.size(); ++i) {
      const Behavior& b = scene.behaviors[i];
      const std::string bpath = path + ".behaviors[" + std::to_string(i) + "]";
      if (!targets.insert(behavior_target(b)).second) {
        add(step, Severity::Error, IssueCode::DuplicateTarget, bpath,
            "more than one behavior for '" + behavior_target(b) + "' in one scene");
      }
      std::visit([&](const auto& v) { check(step, v, bpath); }, b);
    }
  }

  bool check_device(int step, const DeviceRef& id, DeviceKind kind, const std::string& path) {
    const DeviceDecl* d = story_.find_device(id);
    if (d == nullptr) {
      add(step, Severity::Error, IssueCode::UnknownDevice, path + ".device", "unknown device '" + id + "'");
      return false;
    }
    if (d->kind != kind) {
      add(step, Severity::Error, IssueCode::WrongDeviceKind, path + ".device",
          "device '" + id + "' is a " + std::string(to_string(d->kind)) + ", not a " +
              std::string(to_string(kind)));
      return false;
    }
    return true;
  }

  bool check_asset(int step, const AssetRef& id, const std::string& path) {
    if (story_.find_asset(id) == nullptr) {
      add(step, Severity::Error, IssueCode::UnknownAsset, path + ".asset", "unknown asset '" + id + "'");
      return false;
    }
    return true;
  }

  void check_range(int step, const std::optional<int>& value, int lo, int hi, const std::string& path) {
    if (value && (*value < lo || *value > hi)) {
      add(step, Severity::Error, IssueCode::OutOfRange, path,
          "value " + std::to_string(*value) + " outside " + std::to_string(lo) + ".." + std::to_string(hi));
    }
  }

  void check(int step, const LightSet& b, const std::string& path) {
    check_device(step, b.device, DeviceKind::Light, path);
    if (b.set.empty()) add(step, Severity::Error, IssueCode::EmptyBehavior, path, "light behavior sets nothing");
    check_range(step, b.set.brightness_pct, 0, 100, path + ".brightness_pct");
    check_range(step, b.set.hue_deg, 0, 360, path + ".hue_deg");
    if (b.set.effect && !registry_.has_light_effect(*b.set.effect)) {
      add(step, Severity::Error, IssueCode::UnknownEffect, path + ".effect", "unknown light effect '" + *b.set.effect + "'");
    }
    if (b.set.on == true && b.set.brightness_pct == 0) {
      add(step, Severity::Error, IssueCode::ConflictingFields, path, "light cannot be on at brightness 0");
    }
  }

  void check(int step, const FanSet& b, const std::string& path) {
    check_device(step, b.device, DeviceKind::Fan, path);
    if (b.set.empty()) add(step, Severity::Error, IssueCode::EmptyBehavior, path, "fan behavior sets nothing");
    check_range(step, b.set.intensity, 0, kMaxFanIntensity, path + ".intensity");
    if (b.set.on == true && b.set.intensity == 0) {
      add(step, Severity::Error, IssueCode::ConflictingFields, path, "fan cannot be on at intensity 0");
    }
  }

  void check(int step, const SpeakerSet& b, const std::string& path) {
    check_device(step, b.device, DeviceKind::Speaker, path);
    if (b.set.empty()) add(step, Severity::Error, IssueCode::EmptyBehavior, path, "speaker behavior sets nothing");
    check_range(step, b.set.volume_pct, 0, 100, path + ".volume_pct");
    if (b.set.sound && !registry_.has_sound(*b.set.sound)) {
      add(step, Severity::Error, IssueCode::UnknownEffect, path + ".sound", "unknown sound '" + *b.set.sound + "'");
    }
    if (b.set.on == false && b.set.sound && *b.set.sound != kNone) {
      add(step, Severity::Error, IssueCode::ConflictingFields, path, "speaker cannot play while off");
    }
  }

  void check(int step, const AssetPlace& b, const std::string& path) {
    check_asset(step, b.asset, path);
    if (!is_finite(b.position)) {
      add(step, Severity::Error, IssueCode::NonFinite, path + ".position", "position must be finite");
    }
    if (b.anchor && story_.find_device(*b.anchor) == nullptr) {
      add(step, Severity::Error, IssueCode::UnknownDevice, path + ".anchor", "unknown anchor device '" + *b.anchor + "'");
    }
  }

  void check(int step, const AssetRemove& b, const std::string& path) { check_asset(step, b.asset, path); }

  void check(int step, const AssetEffect& b, const std::string& path) {
    check_asset(step, b.asset, path);
    if (!registry_.has_asset_effect(b.effect)) {
      add(step, Severity::Error, IssueCode::UnknownEffect, path + ".effect", "unknown asset effect '" + b.effect + "'");
    }
  }

  const Story& story_;
  const EffectRegistry& registry_;
  std::vector<ValidationIssue> issues_;
};

}  // namespace

std::string_view to_string(IssueCode code) {
  static constexpr std::string_view names[] = {
      "duplicate-id",      "unknown-device",         "unknown-asset",       "wrong-device-kind",
      "out-of-range",      "unknown-effect",         "empty-behavior",      "conflicting-fields",
      "duplicate-target",  "non-finite",             "empty-keyword",       "bad-threshold",
      "unplaced-touch-target", "trigger-must-be-tap", "missing-narration",  "duplicate-keyword",
      "empty-story",       "unknown-key",
  };
  return names[static_cast<std::size_t>(code)];
}

std::string format_issue(const ValidationIssue& issue) {
  std::string out = issue.severity == Severity::Error ? "error" : "warning";
  out += ": ";
  out += issue.path;
  out += ": ";
  out += issue.message;
  out += " [";
  out += to_string(issue.code);
  out += "]";
  return out;
}

bool has_errors(const std::vector<ValidationIssue>& issues) {
  for (const auto& i : issues) {
    if (i.severity == Severity::Error) return true;
  }
  return false;
}

std::vector<ValidationIssue> validate_story(const Story& story, const EffectRegistry& registry) {
  return Validator(story, registry).run();
}

}  // namespace loomcast
