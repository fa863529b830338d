#include "loomcast/authoring.hpp"

#include <algorithm>
#include <cstdlib>

#include "loomcast/text.hpp"

namespace loomcast {

const AssetCatalog& AssetCatalog::builtin() {
  static const AssetCatalog catalog({
      {"red_balloon", "balloon_red", "red balloon", 0.15},
      {"moon", "moon_crescent", "moon", 0.3},
      {"cow", "cow_jumping", "cow", 0.25},
      {"bears", "bears_three", "three bears", 0.3},
      {"kittens", "kittens_two", "kittens", 0.2},
      {"kite", "kite_diamond", "kite", 0.3},
      {"cloud", "cloud_storm", "cloud", 0.5},
      {"rain", "rain_curtain", "rain", 0.5},
      {"lightning", "lightning_bolt", "lightning", 0.4},
      {"key", "key_brass", "key", 0.1},
      {"wind", "wind_character", "wind", 0.3},
      {"sun", "sun_character", "sun", 0.3},
      {"traveler", "traveler_cloak", "traveler", 0.3},
  });
  return catalog;
}

const CatalogEntry* AssetCatalog::resolve(std::string_view name) const {
  const std::string wanted = join_tokens(normalize(name));
  for (const auto& e : entries_) {
    if (e.id == name || join_tokens(normalize(e.name)) == wanted) return &e;
  }
  return nullptr;
}

ValidationRejected::ValidationRejected(std::vector<ValidationIssue> issues)
    : Error([&] {
        std::string msg = "edit rejected";
        for (const auto& i : issues) msg += "; " + format_issue(i);
        return msg;
      }()),
      issues_(std::move(issues)) {}

bool is_incomplete_work(const ValidationIssue& issue) { return issue.code == IssueCode::MissingNarration; }

namespace {

void upsert(Scene& scene, Behavior behavior) {
  auto it = std::find_if(scene.behaviors.begin(), scene.behaviors.end(),
                         [&](const Behavior& b) { return behavior_target(b) == behavior_target(behavior); });
  if (it != scene.behaviors.end()) {
    *it = std::move(behavior);
  } else {
    scene.behaviors.push_back(std::move(behavior));
  }
}

Step& step_at(Story& story, int step) {
  if (step < 0 || step > story.last_index()) {
    throw IndexOutOfRange("step " + std::to_string(step) + " out of range [0, " + std::to_string(story.last_index()) +
                          "]");
  }
  return story.steps[static_cast<std::size_t>(step)];
}

struct EditApplier {
  Story& story;
  const AssetCatalog& catalog;

  void operator()(const CreateStory& c) const {
    story = Story{};
    story.id = c.id;
    story.title = c.title;
    story.narrator_mode = c.narrator_mode;
    story.actors = c.actors;
    story.devices = c.devices;
  }
  void operator()(const AppendScene& c) const {
    story.steps.push_back(Step{c.trigger.value_or(TapTrigger{}), Scene{}});
  }
  void operator()(const SetTrigger& c) const { step_at(story, c.step).trigger = c.trigger; }
  void operator()(const UpsertBehavior& c) const { upsert(story.scene(c.scene), c.behavior); }
  void operator()(const RemoveBehavior& c) const {
    auto& behaviors = story.scene(c.scene).behaviors;
    std::erase_if(behaviors, [&](const Behavior& b) { return behavior_target(b) == c.target; });
  }
  void operator()(const PlaceAsset& c) const {
    Scene& scene = story.scene(c.scene);
    const CatalogEntry* entry = catalog.resolve(c.asset_name);
    if (entry == nullptr) throw UnknownAsset("no asset named '" + c.asset_name + "' in the catalog");
    if (story.find_asset(entry->id) == nullptr) {
      Vec3 at = c.position;
      if (c.anchor) {
        if (const DeviceDecl* d = story.find_device(*c.anchor)) at = d->position + c.position;
      }
      story.assets.push_back(AssetDecl{entry->id, entry->model, entry->name, at, entry->half_extent_m});
    }
    upsert(scene, AssetPlace{entry->id, c.position, c.anchor});
  }
  void operator()(const SetNarration& c) const {
    Scene& scene = story.scene(c.scene);
    if (c.text.empty()) {
      scene.narration.reset();
    } else {
      scene.narration = c.text;
    }
  }
  void operator()(const DeleteScene& c) const {
    step_at(story, c.step);
    story.steps.erase(story.steps.begin() + c.step);
  }
};

}  // namespace

Story apply_edit(const Story& story, const EditCommand& command, const AssetCatalog& catalog) {
  Story next = story;
  std::visit(EditApplier{next, catalog}, command);

  std::vector<ValidationIssue> blocking;
  for (auto& issue : validate_story(next)) {
    if (issue.severity == Severity::Error && !is_incomplete_work(issue)) blocking.push_back(std::move(issue));
  }
  if (!blocking.empty()) throw ValidationRejected(std::move(blocking));
  return next;
}

const Story& StoryRevisions::apply(const EditCommand& command, const AssetCatalog& catalog) {
  Story next = apply_edit(current(), command, catalog);
  revisions_.push_back(std::move(next));
  return current();
}

const Story& StoryRevisions::replace(Story story) {
  revisions_.push_back(std::move(story));
  return current();
}

bool StoryRevisions::undo() {
  if (revisions_.size() <= 1) return false;
  revisions_.pop_back();
  return true;
}

PlaybackSession preview(const Story& story, int up_to, std::optional<DeviceRegistry> drivers) {
  story.scene(up_to);  // range check before any device is touched
  DeviceRegistry registry = drivers ? std::move(*drivers) : DeviceRegistry::simulated_for(story);
  PlaybackSession session = start_session(story, std::move(registry));
  if (up_to >= 0) session.goto_scene(up_to);
  return session;
}

// Fixtures

std::string_view fixture_name(Fixture fixture) {
  switch (fixture) {
    case Fixture::GoodnightMoon:
      return "goodnight_moon";
    case Fixture::BenjaminFranklin:
      return "benjamin_franklin";
    case Fixture::WindAndSun:
      return "wind_and_sun";
  }
  return "";
}

std::optional<Fixture> fixture_from_name(std::string_view name) {
  for (Fixture f : kAllFixtures) {
    if (fixture_name(f) == name) return f;
  }
  return std::nullopt;
}

namespace {

KeywordTrigger keyword(std::string phrase) { return KeywordTrigger{std::move(phrase)}; }

LightSet light(std::string device, LightFields set) { return LightSet{std::move(device), std::move(set)}; }
FanSet fan(std::string device, FanFields set) { return FanSet{std::move(device), set}; }
SpeakerSet speaker(std::string device, SpeakerFields set) { return SpeakerSet{std::move(device), std::move(set)}; }

std::vector<EditCommand> goodnight_moon() {
  std::vector<DeviceDecl> room{
      {"lamp", DeviceKind::Light, "Bedside lamp", {1.2, 0.9, -1.0}},
      {"fan", DeviceKind::Fan, "Fan", {-1.2, 0.6, -1.0}},
      {"speaker", DeviceKind::Speaker, "Speaker", {0.0, 0.8, -2.0}},
  };
  return {
      CreateStory{NarratorMode::User, "Goodnight Moon", room, {}, "goodnight_moon"},
      AppendScene{keyword("small, cozy room")},
      UpsertBehavior{0, light("lamp", {.brightness_pct = 20})},
      AppendScene{keyword("red balloon")},
      PlaceAsset{1, "red balloon", {0.5, 1.4, -1.2}, std::nullopt},
      AppendScene{keyword("speaker playing a pleasant tune")},
      UpsertBehavior{2, speaker("speaker", {.sound = "lullaby"})},
      AppendScene{keyword("cow jumping over the moon")},
      PlaceAsset{3, "moon", {0.0, 2.2, -2.0}, std::nullopt},
      PlaceAsset{3, "cow", {-0.3, 1.8, -1.9}, std::nullopt},
      AppendScene{keyword("three little bears")},
      PlaceAsset{4, "three bears", {-0.8, 0.4, -1.3}, std::nullopt},
      AppendScene{keyword("fan blowing gently")},
      UpsertBehavior{5, fan("fan", {.intensity = 1})},
      AppendScene{keyword("goodnight moon")},
      UpsertBehavior{6, AssetRemove{"moon"}},
      UpsertBehavior{6, AssetRemove{"cow"}},
      AppendScene{keyword("goodnight red")},
      UpsertBehavior{7, AssetRemove{"red_balloon"}},
      AppendScene{keyword("goodnight lamp")},
      UpsertBehavior{8, light("lamp", {.on = false})},
      AppendScene{keyword("goodnight fan")},
      UpsertBehavior{9, fan("fan", {.on = false})},
      AppendScene{keyword("goodnight noises everywhere")},
      UpsertBehavior{10, speaker("speaker", {.on = false})},
  };
}

std::vector<EditCommand> benjamin_franklin() {
  std::vector<DeviceDecl> room{
      {"ceiling_light", DeviceKind::Light, "Ceiling light", {0.0, 2.4, 0.0}},
      {"fan", DeviceKind::Fan, "Fan", {-1.5, 0.6, -1.0}},
      {"speaker", DeviceKind::Speaker, "Speaker", {1.5, 0.8, -1.0}},
  };
  return {
      CreateStory{NarratorMode::User,
                  "Benjamin Franklin Kite Experiment",
                  room,
                  {"Benjamin Franklin", "Benjamin Franklin Jr."},
                  "benjamin_franklin"},
      AppendScene{keyword("took a kite")},
      PlaceAsset{0, "kite", {0.0, 1.6, -1.5}, std::nullopt},
      AppendScene{keyword("clouds first passed over")},
      UpsertBehavior{1, fan("fan", {.on = true, .intensity = 2})},
      PlaceAsset{1, "cloud", {0.0, 2.3, -1.5}, std::nullopt},
      UpsertBehavior{1, light("ceiling_light", {.brightness_pct = 40})},
      AppendScene{keyword("thunder rumbled")},
      UpsertBehavior{2, speaker("speaker", {.sound = "thunder"})},
      PlaceAsset{2, "kite", {0.3, 2.0, -1.5}, std::nullopt},
      AppendScene{keyword("rain began to fall")},
      UpsertBehavior{3, fan("fan", {.intensity = 3})},
      PlaceAsset{3, "rain", {0.0, 1.8, -1.5}, std::nullopt},
      AppendScene{keyword("tied a key")},
      PlaceAsset{4, "key", {0.4, 1.2, 0.1}, std::nullopt},
      AppendScene{TouchTrigger{"key", kDefaultTouchThreshold}},
      UpsertBehavior{5, light("ceiling_light", {.effect = "flickering"})},
      UpsertBehavior{5, AssetEffect{"key", "sparkle"}},
  };
}

std::vector<EditCommand> wind_and_sun() {
  std::vector<DeviceDecl> room{
      {"fan", DeviceKind::Fan, "Fan", {-1.2, 0.6, -1.2}},
      {"sun_lamp", DeviceKind::Light, "Sun lamp", {1.2, 1.0, -1.2}},
      {"speaker", DeviceKind::Speaker, "Speaker", {0.0, 0.8, -2.0}},
  };
  return {
      CreateStory{NarratorMode::System, "The Wind and the Sun", room, {}, "wind_and_sun"},
      PlaceAsset{-1, "wind", {0.0, 0.4, 0.0}, "fan"},
      PlaceAsset{-1, "sun", {0.0, 0.4, 0.0}, "sun_lamp"},
      UpsertBehavior{-1, light("sun_lamp", {.brightness_pct = 30})},
      SetNarration{-1, "The Wind and the Sun were arguing about which of them was the stronger."},
      AppendScene{},
      PlaceAsset{0, "traveler", {0.0, 0.0, -1.5}, std::nullopt},
      SetNarration{0, "Just then a traveler came down the road, wrapped in a warm cloak."},
      AppendScene{},
      UpsertBehavior{1, fan("fan", {.intensity = 2})},
      UpsertBehavior{1, AssetEffect{"wind", "glow"}},
      SetNarration{1, "The Wind went first and blew hard to tear the cloak away."},
      AppendScene{},
      UpsertBehavior{2, fan("fan", {.intensity = 3})},
      UpsertBehavior{2, speaker("speaker", {.sound = "wind"})},
      SetNarration{2, "The harder the Wind blew, the tighter the traveler held the cloak."},
      AppendScene{},
      UpsertBehavior{3, fan("fan", {.on = false})},
      UpsertBehavior{3, speaker("speaker", {.sound = "none"})},
      UpsertBehavior{3, AssetEffect{"wind", "none"}},
      SetNarration{3, "At last the Wind gave up. Then it was the Sun's turn."},
      AppendScene{},
      UpsertBehavior{4, light("sun_lamp", {.brightness_pct = 100, .hue_deg = 40})},
      UpsertBehavior{4, AssetEffect{"sun", "glow"}},
      SetNarration{4, "The Sun shone warmer and warmer, and the traveler took off the cloak."},
      AppendScene{},
      UpsertBehavior{5, light("sun_lamp", {.effect = "pulse"})},
      SetNarration{5, "Gentle persuasion wins where force fails."},
  };
}

}  // namespace

std::vector<EditCommand> fixture_edits(Fixture fixture) {
  switch (fixture) {
    case Fixture::GoodnightMoon:
      return goodnight_moon();
    case Fixture::BenjaminFranklin:
      return benjamin_franklin();
    case Fixture::WindAndSun:
      return wind_and_sun();
  }
  return {};
}

Story build_fixture(Fixture fixture) {
  Story story;
  for (const auto& edit : fixture_edits(fixture)) story = apply_edit(story, edit);
  return story;
}

#ifndef LOOMCAST_DEFAULT_FIXTURE_DIR
#define LOOMCAST_DEFAULT_FIXTURE_DIR "fixtures"
#endif

std::filesystem::path fixture_directory() {
  if (const char* dir = std::getenv("LOOMCAST_FIXTURES"); dir != nullptr && *dir != '\0') return dir;
  return LOOMCAST_DEFAULT_FIXTURE_DIR;
}

std::filesystem::path resolve_story_path(const std::string& arg) {
  std::filesystem::path path(arg);
  if (std::filesystem::exists(path)) return path;
  if (fixture_from_name(arg)) return fixture_directory() / (arg + std::string(kStoryExtension));
  return path;
}

// Edit command documents

namespace {

int int_field(const ojson& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) throw SchemaError(key, "expected an integer");
  return j[key].get<int>();
}

std::string string_field(const ojson& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw SchemaError(key, "expected a string");
  return j[key].get<std::string>();
}

}  // namespace

ojson edit_to_json(const EditCommand& command) {
  struct Visitor {
    ojson operator()(const CreateStory& c) const {
      ojson j{{"type", "create_story"}, {"narrator", std::string(to_string(c.narrator_mode))}, {"title", c.title}};
      if (!c.id.empty()) j["id"] = c.id;
      j["devices"] = ojson::array();
      for (const auto& d : c.devices) {
        j["devices"].push_back(
            {{"id", d.id}, {"kind", std::string(to_string(d.kind))}, {"name", d.name}, {"position", vec3_to_json(d.position)}});
      }
      if (!c.actors.empty()) j["actors"] = c.actors;
      return j;
    }
    ojson operator()(const AppendScene& c) const {
      ojson j{{"type", "append_scene"}};
      if (c.trigger) j["trigger"] = trigger_to_json(*c.trigger);
      return j;
    }
    ojson operator()(const SetTrigger& c) const {
      return {{"type", "set_trigger"}, {"step", c.step}, {"trigger", trigger_to_json(c.trigger)}};
    }
    ojson operator()(const UpsertBehavior& c) const {
      return {{"type", "upsert_behavior"}, {"scene", c.scene}, {"behavior", behavior_to_json(c.behavior)}};
    }
    ojson operator()(const RemoveBehavior& c) const {
      return {{"type", "remove_behavior"}, {"scene", c.scene}, {"target", c.target}};
    }
    ojson operator()(const PlaceAsset& c) const {
      ojson j{{"type", "place_asset"}, {"scene", c.scene}, {"asset", c.asset_name}, {"position", vec3_to_json(c.position)}};
      if (c.anchor) j["anchor"] = *c.anchor;
      return j;
    }
    ojson operator()(const SetNarration& c) const {
      return {{"type", "set_narration"}, {"scene", c.scene}, {"text", c.text}};
    }
    ojson operator()(const DeleteScene& c) const { return {{"type", "delete_scene"}, {"step", c.step}}; }
  };
  return std::visit(Visitor{}, command);
}

EditCommand edit_from_json(const ojson& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  const std::string type = string_field(j, "type");
  if (type == "create_story") {
    CreateStory c;
    const std::string narrator = string_field(j, "narrator");
    if (narrator != "user" && narrator != "system") throw SchemaError("narrator", "expected \"user\" or \"system\"");
    c.narrator_mode = narrator == "system" ? NarratorMode::System : NarratorMode::User;
    c.title = j.value("title", "");
    c.id = j.value("id", "");
    if (j.contains("devices")) {
      // Reuse the story reader for device declarations.
      ojson doc{{"format_version", kFormatVersion}, {"title", ""}, {"narrator", "user"},
                {"devices", j["devices"]}, {"assets", ojson::array()},
                {"initial", {{"behaviors", ojson::array()}}}, {"steps", ojson::array()}};
      std::vector<ValidationIssue> ignored;
      c.devices = story_from_json(doc, ParseOptions{true}, ignored).devices;
    }
    if (j.contains("actors")) c.actors = j["actors"].get<std::vector<std::string>>();
    return c;
  }
  if (type == "append_scene") {
    AppendScene c;
    if (j.contains("trigger")) c.trigger = trigger_from_json(j["trigger"]);
    return c;
  }
  if (type == "set_trigger") {
    if (!j.contains("trigger")) throw SchemaError("trigger", "missing required field");
    return SetTrigger{int_field(j, "step"), trigger_from_json(j["trigger"])};
  }
  if (type == "upsert_behavior") {
    if (!j.contains("behavior")) throw SchemaError("behavior", "missing required field");
    return UpsertBehavior{int_field(j, "scene"), behavior_from_json(j["behavior"])};
  }
  if (type == "remove_behavior") return RemoveBehavior{int_field(j, "scene"), string_field(j, "target")};
  if (type == "place_asset") {
    if (!j.contains("position")) throw SchemaError("position", "missing required field");
    PlaceAsset c{int_field(j, "scene"), string_field(j, "asset"), vec3_from_json(j["position"]), std::nullopt};
    if (j.contains("anchor")) c.anchor = string_field(j, "anchor");
    return c;
  }
  if (type == "set_narration") return SetNarration{int_field(j, "scene"), string_field(j, "text")};
  if (type == "delete_scene") return DeleteScene{int_field(j, "step")};
  throw SchemaError("type", "unknown edit type '" + type + "'");
}

}  // namespace loomcast
