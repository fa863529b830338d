#include "loomcast/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace loomcast {
namespace {

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }
std::string key_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

// Walks one JSON object, tracking which keys were consumed so unknown keys
// can be reported once all fields are read.
class ObjectReader {
 public:
  ObjectReader(const ojson& j, std::string path, const ParseOptions& options, std::vector<ValidationIssue>* issues)
      : j_(j), path_(std::move(path)), options_(options), issues_(issues) {
    if (!j_.is_object()) throw SchemaError(path_.empty() ? "$" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string child(std::string_view key) const { return key_path(path_, key); }

  const ojson* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  const ojson& require(std::string_view key) {
    const ojson* v = find(key);
    if (v == nullptr) throw SchemaError(child(key), "missing required field");
    return *v;
  }

  std::string string(std::string_view key) {
    const ojson& v = require(key);
    if (!v.is_string()) throw SchemaError(child(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> opt_string(std::string_view key) {
    const ojson* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) throw SchemaError(child(key), "expected a string");
    return v->get<std::string>();
  }

  std::optional<bool> opt_bool(std::string_view key) {
    const ojson* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_boolean()) throw SchemaError(child(key), "expected a boolean");
    return v->get<bool>();
  }

  std::optional<int> opt_int(std::string_view key) {
    const ojson* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number_integer()) throw SchemaError(child(key), "expected an integer");
    const auto n = v->get<std::int64_t>();
    if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
      throw SchemaError(child(key), "integer out of range");
    }
    return static_cast<int>(n);
  }

  std::optional<double> opt_number(std::string_view key) {
    const ojson* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number()) throw SchemaError(child(key), "expected a number");
    return v->get<double>();
  }

  const ojson& array(std::string_view key) {
    const ojson& v = require(key);
    if (!v.is_array()) throw SchemaError(child(key), "expected an array");
    return v;
  }

  void finish() {
    for (const auto& [key, value] : j_.items()) {
      if (seen_.contains(key)) continue;
      if (options_.strict || issues_ == nullptr) throw SchemaError(child(key), "unknown key");
      issues_->push_back({-1, Severity::Warning, IssueCode::UnknownKey, child(key), "unknown key '" + key + "'"});
    }
  }

 private:
  const ojson& j_;
  std::string path_;
  ParseOptions options_;
  std::vector<ValidationIssue>* issues_;
  std::set<std::string> seen_;
};

const ParseOptions kStrict{true};

DeviceKind device_kind_from(const std::string& s, const std::string& path) {
  if (s == "light") return DeviceKind::Light;
  if (s == "fan") return DeviceKind::Fan;
  if (s == "speaker") return DeviceKind::Speaker;
  throw SchemaError(path, "unknown device kind '" + s + "'");
}

Trigger read_trigger(const ojson& j, const std::string& path, const ParseOptions& options,
                     std::vector<ValidationIssue>* issues) {
  ObjectReader r(j, path, options, issues);
  const std::string type = r.string("type");
  Trigger trigger;
  if (type == "tap") {
    trigger = TapTrigger{};
  } else if (type == "keyword") {
    trigger = KeywordTrigger{r.string("phrase")};
  } else if (type == "touch") {
    trigger = TouchTrigger{r.string("target"), r.opt_number("threshold_m").value_or(kDefaultTouchThreshold)};
  } else {
    throw SchemaError(r.child("type"), "unknown trigger type '" + type + "'");
  }
  r.finish();
  return trigger;
}

Vec3 read_vec3(const ojson& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(path, "expected [x, y, z]");
  Vec3 v;
  double* out[] = {&v.x, &v.y, &v.z};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw SchemaError(index_path(path, i), "expected a number");
    *out[i] = j[i].get<double>();
  }
  return v;
}

Behavior read_behavior(const ojson& j, const std::string& path, const ParseOptions& options,
                       std::vector<ValidationIssue>* issues) {
  ObjectReader r(j, path, options, issues);
  const std::string type = r.string("type");
  Behavior behavior;
  if (type == "light") {
    LightSet b{r.string("device"), {}};
    b.set.on = r.opt_bool("on");
    b.set.brightness_pct = r.opt_int("brightness_pct");
    b.set.hue_deg = r.opt_int("hue_deg");
    b.set.effect = r.opt_string("effect");
    behavior = std::move(b);
  } else if (type == "fan") {
    FanSet b{r.string("device"), {}};
    b.set.on = r.opt_bool("on");
    b.set.intensity = r.opt_int("intensity");
    behavior = std::move(b);
  } else if (type == "speaker") {
    SpeakerSet b{r.string("device"), {}};
    b.set.on = r.opt_bool("on");
    b.set.volume_pct = r.opt_int("volume_pct");
    b.set.sound = r.opt_string("sound");
    behavior = std::move(b);
  } else if (type == "place") {
    AssetPlace b;
    b.asset = r.string("asset");
    b.position = read_vec3(r.require("position"), r.child("position"));
    b.anchor = r.opt_string("anchor");
    behavior = std::move(b);
  } else if (type == "remove") {
    behavior = AssetRemove{r.string("asset")};
  } else if (type == "asset_effect") {
    AssetEffect b;
    b.asset = r.string("asset");
    b.effect = r.string("effect");
    behavior = std::move(b);
  } else {
    throw SchemaError(r.child("type"), "unknown behavior type '" + type + "'");
  }
  r.finish();
  return behavior;
}

Scene read_scene(const ojson& j, const std::string& path, const ParseOptions& options,
                 std::vector<ValidationIssue>* issues) {
  ObjectReader r(j, path, options, issues);
  Scene scene;
  const ojson& behaviors = r.array("behaviors");
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    scene.behaviors.push_back(read_behavior(behaviors[i], index_path(r.child("behaviors"), i), options, issues));
  }
  scene.narration = r.opt_string("narration");
  r.finish();
  return scene;
}

ojson scene_to_json(const Scene& scene) {
  ojson j = ojson::object();
  j["behaviors"] = ojson::array();
  for (const auto& b : scene.behaviors) j["behaviors"].push_back(behavior_to_json(b));
  if (scene.narration) j["narration"] = *scene.narration;
  return j;
}

}  // namespace

SemanticError::SemanticError(std::vector<ValidationIssue> issues)
    : Error([&] {
        std::string msg = "story failed validation";
        for (const auto& i : issues) {
          if (i.severity == Severity::Error) {
            msg += "; " + format_issue(i);
          }
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

ojson vec3_to_json(const Vec3& v) { return ojson::array({v.x, v.y, v.z}); }
Vec3 vec3_from_json(const ojson& j, const std::string& path) { return read_vec3(j, path); }

ojson trigger_to_json(const Trigger& trigger) {
  ojson j = ojson::object();
  j["type"] = std::string(trigger_type(trigger));
  if (const auto* kw = std::get_if<KeywordTrigger>(&trigger)) {
    j["phrase"] = kw->phrase;
  } else if (const auto* touch = std::get_if<TouchTrigger>(&trigger)) {
    j["target"] = touch->target;
    j["threshold_m"] = touch->threshold_m;
  }
  return j;
}

Trigger trigger_from_json(const ojson& j, const std::string& path) { return read_trigger(j, path, kStrict, nullptr); }

ojson behavior_to_json(const Behavior& behavior) {
  ojson j = ojson::object();
  j["type"] = std::string(behavior_type(behavior));
  struct Visitor {
    ojson& j;
    void operator()(const LightSet& b) const {
      j["device"] = b.device;
      if (b.set.on) j["on"] = *b.set.on;
      if (b.set.brightness_pct) j["brightness_pct"] = *b.set.brightness_pct;
      if (b.set.hue_deg) j["hue_deg"] = *b.set.hue_deg;
      if (b.set.effect) j["effect"] = *b.set.effect;
    }
    void operator()(const FanSet& b) const {
      j["device"] = b.device;
      if (b.set.on) j["on"] = *b.set.on;
      if (b.set.intensity) j["intensity"] = *b.set.intensity;
    }
    void operator()(const SpeakerSet& b) const {
      j["device"] = b.device;
      if (b.set.on) j["on"] = *b.set.on;
      if (b.set.volume_pct) j["volume_pct"] = *b.set.volume_pct;
      if (b.set.sound) j["sound"] = *b.set.sound;
    }
    void operator()(const AssetPlace& b) const {
      j["asset"] = b.asset;
      j["position"] = vec3_to_json(b.position);
      if (b.anchor) j["anchor"] = *b.anchor;
    }
    void operator()(const AssetRemove& b) const { j["asset"] = b.asset; }
    void operator()(const AssetEffect& b) const {
      j["asset"] = b.asset;
      j["effect"] = b.effect;
    }
  };
  std::visit(Visitor{j}, behavior);
  return j;
}

Behavior behavior_from_json(const ojson& j, const std::string& path) {
  return read_behavior(j, path, kStrict, nullptr);
}

ojson story_to_json(const Story& story) {
  ojson doc = ojson::object();
  doc["format_version"] = kFormatVersion;
  if (!story.id.empty()) doc["id"] = story.id;
  doc["title"] = story.title;
  doc["narrator"] = std::string(to_string(story.narrator_mode));
  if (!story.actors.empty()) doc["actors"] = story.actors;
  doc["devices"] = ojson::array();
  for (const auto& d : story.devices) {
    doc["devices"].push_back(ojson{{"id", d.id},
                                   {"kind", std::string(to_string(d.kind))},
                                   {"name", d.name},
                                   {"position", vec3_to_json(d.position)}});
  }
  doc["assets"] = ojson::array();
  for (const auto& a : story.assets) {
    doc["assets"].push_back(ojson{{"id", a.id},
                                  {"model", a.model},
                                  {"name", a.name},
                                  {"position", vec3_to_json(a.position)},
                                  {"half_extent_m", a.half_extent_m}});
  }
  doc["initial"] = scene_to_json(story.initial);
  doc["steps"] = ojson::array();
  for (const auto& s : story.steps) {
    doc["steps"].push_back(ojson{{"trigger", trigger_to_json(s.trigger)}, {"scene", scene_to_json(s.scene)}});
  }
  return doc;
}

Story story_from_json(const ojson& doc, const ParseOptions& options, std::vector<ValidationIssue>& issues) {
  ObjectReader r(doc, "", options, &issues);
  const ojson& version = r.require("format_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kFormatVersion) {
    throw SchemaError("format_version", "unsupported format version (expected " + std::to_string(kFormatVersion) + ")");
  }

  Story story;
  story.id = r.opt_string("id").value_or("");
  story.title = r.string("title");
  const std::string narrator = r.string("narrator");
  if (narrator == "user") {
    story.narrator_mode = NarratorMode::User;
  } else if (narrator == "system") {
    story.narrator_mode = NarratorMode::System;
  } else {
    throw SchemaError("narrator", "expected \"user\" or \"system\"");
  }

  if (const ojson* actors = r.find("actors")) {
    if (!actors->is_array()) throw SchemaError("actors", "expected an array");
    for (std::size_t i = 0; i < actors->size(); ++i) {
      if (!(*actors)[i].is_string()) throw SchemaError(index_path("actors", i), "expected a string");
      story.actors.push_back((*actors)[i].get<std::string>());
    }
  }

  const ojson& devices = r.array("devices");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    ObjectReader d(devices[i], index_path("devices", i), options, &issues);
    DeviceDecl decl;
    decl.id = d.string("id");
    decl.kind = device_kind_from(d.string("kind"), d.child("kind"));
    decl.name = d.opt_string("name").value_or("");
    if (const ojson* p = d.find("position")) decl.position = read_vec3(*p, d.child("position"));
    d.finish();
    story.devices.push_back(std::move(decl));
  }

  const ojson& assets = r.array("assets");
  for (std::size_t i = 0; i < assets.size(); ++i) {
    ObjectReader a(assets[i], index_path("assets", i), options, &issues);
    AssetDecl decl;
    decl.id = a.string("id");
    decl.model = a.opt_string("model").value_or(decl.id);
    decl.name = a.opt_string("name").value_or("");
    if (const ojson* p = a.find("position")) decl.position = read_vec3(*p, a.child("position"));
    decl.half_extent_m = a.opt_number("half_extent_m").value_or(decl.half_extent_m);
    a.finish();
    story.assets.push_back(std::move(decl));
  }

  story.initial = read_scene(r.require("initial"), "initial", options, &issues);

  const ojson& steps = r.array("steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    ObjectReader s(steps[i], index_path("steps", i), options, &issues);
    Step step{read_trigger(s.require("trigger"), s.child("trigger"), options, &issues),
              read_scene(s.require("scene"), s.child("scene"), options, &issues)};
    s.finish();
    story.steps.push_back(std::move(step));
  }
  r.finish();
  return story;
}

ParsedStory parse_story(std::string_view text, const ParseOptions& options) {
  ojson doc;
  try {
    doc = ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    auto [line, column] = line_column(text, offset);
    throw SyntaxError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                          e.what(),
                      line, column);
  }

  ParsedStory parsed;
  parsed.story = story_from_json(doc, options, parsed.issues);
  auto issues = validate_story(parsed.story);
  if (has_errors(issues)) throw SemanticError(std::move(issues));
  parsed.issues.insert(parsed.issues.end(), issues.begin(), issues.end());
  return parsed;
}

std::string serialize_story(const Story& story) {
  auto issues = validate_story(story);
  if (has_errors(issues)) {
    throw InvalidStory(SemanticError(std::move(issues)).what());
  }
  return story_to_json(story).dump(2) + "\n";
}

ParsedStory load_story_file(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_story(text.str(), options);
}

}  // namespace loomcast
