#include "loomcast/wire.hpp"

namespace loomcast {
namespace {

const ojson& member(const ojson& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key, "missing required field");
  return *it;
}

template <typename T>
T get(const ojson& j, const char* key, const std::string& path) {
  const ojson& v = member(j, key, path);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(path + "." + key, "wrong type");
  }
}

template <typename T>
std::optional<T> get_opt(const ojson& j, const char* key, const std::string& path) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return get<T>(j, key, path);
}

template <typename T>
void put_opt(ojson& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

LightFields light_fields_from_json(const ojson& j, const std::string& path) {
  return {get_opt<bool>(j, "on", path), get_opt<int>(j, "brightness_pct", path), get_opt<int>(j, "hue_deg", path),
          get_opt<std::string>(j, "effect", path)};
}

FanFields fan_fields_from_json(const ojson& j, const std::string& path) {
  return {get_opt<bool>(j, "on", path), get_opt<int>(j, "intensity", path)};
}

SpeakerFields speaker_fields_from_json(const ojson& j, const std::string& path) {
  return {get_opt<bool>(j, "on", path), get_opt<int>(j, "volume_pct", path), get_opt<std::string>(j, "sound", path)};
}

template <typename State, typename Decode>
std::map<std::string, State> map_from_json(const ojson& j, const char* key, Decode decode) {
  std::map<std::string, State> out;
  const ojson& m = member(j, key, "world");
  if (!m.is_object()) throw SchemaError(std::string("world.") + key, "expected an object");
  for (const auto& [id, v] : m.items()) out[id] = decode(v, std::string("world.") + key + "." + id);
  return out;
}

}  // namespace

ojson light_fields_to_json(const LightFields& f) {
  ojson j = ojson::object();
  put_opt(j, "on", f.on);
  put_opt(j, "brightness_pct", f.brightness_pct);
  put_opt(j, "hue_deg", f.hue_deg);
  put_opt(j, "effect", f.effect);
  return j;
}

ojson fan_fields_to_json(const FanFields& f) {
  ojson j = ojson::object();
  put_opt(j, "on", f.on);
  put_opt(j, "intensity", f.intensity);
  return j;
}

ojson speaker_fields_to_json(const SpeakerFields& f) {
  ojson j = ojson::object();
  put_opt(j, "on", f.on);
  put_opt(j, "volume_pct", f.volume_pct);
  put_opt(j, "sound", f.sound);
  return j;
}

ojson device_state_to_json(const DeviceState& state) {
  struct Visitor {
    ojson operator()(const LightState& s) const {
      ojson j{{"on", s.on}, {"brightness_pct", s.brightness_pct}, {"hue_deg", s.hue_deg}};
      put_opt(j, "effect", s.effect);
      return j;
    }
    ojson operator()(const FanState& s) const { return {{"on", s.on}, {"intensity", s.intensity}}; }
    ojson operator()(const SpeakerState& s) const {
      ojson j{{"on", s.on}, {"volume_pct", s.volume_pct}};
      put_opt(j, "sound", s.sound);
      return j;
    }
  };
  return std::visit(Visitor{}, state);
}

ojson asset_state_to_json(const AssetState& s) {
  ojson j{{"present", s.present}, {"position", vec3_to_json(s.position)}};
  put_opt(j, "anchor", s.anchor);
  put_opt(j, "effect", s.effect);
  return j;
}

namespace {

AssetState asset_state_at(const ojson& j, const std::string& path) {
  AssetState s;
  s.present = get<bool>(j, "present", path);
  s.position = vec3_from_json(member(j, "position", path), path + ".position");
  s.anchor = get_opt<std::string>(j, "anchor", path);
  s.effect = get_opt<std::string>(j, "effect", path);
  return s;
}

}  // namespace

AssetState asset_state_from_json(const ojson& j) { return asset_state_at(j, "asset"); }

ojson world_to_json(const WorldState& world) {
  ojson j{{"lights", ojson::object()}, {"fans", ojson::object()}, {"speakers", ojson::object()},
          {"assets", ojson::object()}};
  for (const auto& [id, s] : world.lights) j["lights"][id] = device_state_to_json(s);
  for (const auto& [id, s] : world.fans) j["fans"][id] = device_state_to_json(s);
  for (const auto& [id, s] : world.speakers) j["speakers"][id] = device_state_to_json(s);
  for (const auto& [id, s] : world.assets) j["assets"][id] = asset_state_to_json(s);
  return j;
}

WorldState world_from_json(const ojson& j) {
  WorldState w;
  w.lights = map_from_json<LightState>(j, "lights", [](const ojson& v, const std::string& path) {
    return LightState{get<bool>(v, "on", path), get<int>(v, "brightness_pct", path), get<int>(v, "hue_deg", path),
                      get_opt<std::string>(v, "effect", path)};
  });
  w.fans = map_from_json<FanState>(j, "fans", [](const ojson& v, const std::string& path) {
    return FanState{get<bool>(v, "on", path), get<int>(v, "intensity", path)};
  });
  w.speakers = map_from_json<SpeakerState>(j, "speakers", [](const ojson& v, const std::string& path) {
    return SpeakerState{get<bool>(v, "on", path), get<int>(v, "volume_pct", path),
                        get_opt<std::string>(v, "sound", path)};
  });
  w.assets = map_from_json<AssetState>(j, "assets", asset_state_at);
  return w;
}

ojson command_to_json(const DeviceCommand& command) {
  struct Visitor {
    ojson& j;
    void operator()(const LightFields& f) const {
      j["kind"] = "light";
      j["set"] = light_fields_to_json(f);
    }
    void operator()(const FanFields& f) const {
      j["kind"] = "fan";
      j["set"] = fan_fields_to_json(f);
    }
    void operator()(const SpeakerCommand& c) const {
      j["kind"] = "speaker";
      j["set"] = speaker_fields_to_json(c.set);
      put_opt(j, "say", c.say);
    }
  };
  ojson j{{"target", command.target}};
  std::visit(Visitor{j}, command.payload);
  return j;
}

DeviceCommand command_from_json(const ojson& j) {
  const std::string path = "command";
  DeviceCommand c;
  c.target = get<std::string>(j, "target", path);
  const std::string kind = get<std::string>(j, "kind", path);
  const ojson& set = member(j, "set", path);
  if (kind == "light") {
    c.payload = light_fields_from_json(set, path + ".set");
  } else if (kind == "fan") {
    c.payload = fan_fields_from_json(set, path + ".set");
  } else if (kind == "speaker") {
    c.payload = SpeakerCommand{speaker_fields_from_json(set, path + ".set"), get_opt<std::string>(j, "say", path)};
  } else {
    throw SchemaError(path + ".kind", "unknown device kind '" + kind + "'");
  }
  return c;
}

ojson plan_to_json(const AnimationPlan& plan) {
  struct Visitor {
    ojson operator()(const FadeIn& e) const {
      return {{"type", "fade_in"}, {"asset", e.asset}, {"duration_s", e.duration_s}, {"end", asset_state_to_json(e.end)}};
    }
    ojson operator()(const FadeOut& e) const {
      return {{"type", "fade_out"}, {"asset", e.asset}, {"duration_s", e.duration_s}, {"end", asset_state_to_json(e.end)}};
    }
    ojson operator()(const Translate& e) const {
      return {{"type", "translate"},     {"asset", e.asset},
              {"from", vec3_to_json(e.from)}, {"to", vec3_to_json(e.to)},
              {"duration_s", e.duration_s}, {"end", asset_state_to_json(e.end)}};
    }
    ojson operator()(const AssetCue& e) const {
      return {{"type", "asset_cue"}, {"asset", e.asset}, {"end", asset_state_to_json(e.end)}};
    }
    ojson operator()(const DeviceCue& e) const { return {{"type", "device_cue"}, {"command", command_to_json(e.command)}}; }
  };
  ojson out = ojson::array();
  for (const auto& e : plan.effects) out.push_back(std::visit(Visitor{}, e));
  return out;
}

AnimationPlan plan_from_json(const ojson& j) {
  if (!j.is_array()) throw SchemaError("plan", "expected an array");
  AnimationPlan plan;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "plan[" + std::to_string(i) + "]";
    const ojson& e = j[i];
    const std::string type = get<std::string>(e, "type", path);
    if (type == "device_cue") {
      plan.effects.push_back(DeviceCue{command_from_json(member(e, "command", path))});
      continue;
    }
    const std::string asset = get<std::string>(e, "asset", path);
    AssetState end = asset_state_at(member(e, "end", path), path + ".end");
    if (type == "fade_in") {
      plan.effects.push_back(FadeIn{asset, get<double>(e, "duration_s", path), end});
    } else if (type == "fade_out") {
      plan.effects.push_back(FadeOut{asset, get<double>(e, "duration_s", path), end});
    } else if (type == "translate") {
      plan.effects.push_back(Translate{asset, vec3_from_json(member(e, "from", path), path + ".from"),
                                       vec3_from_json(member(e, "to", path), path + ".to"),
                                       get<double>(e, "duration_s", path), end});
    } else if (type == "asset_cue") {
      plan.effects.push_back(AssetCue{asset, end});
    } else {
      throw SchemaError(path + ".type", "unknown effect '" + type + "'");
    }
  }
  return plan;
}

ojson event_to_json(const InputEvent& event) {
  ojson j{{"kind", std::string(event_kind(event))}};
  if (const auto* t = std::get_if<TranscriptEvent>(&event)) j["text"] = t->text;
  if (const auto* t = std::get_if<TouchEvent>(&event)) j["position"] = vec3_to_json(t->position);
  if (!event_source(event).empty()) j["source"] = event_source(event);
  return j;
}

InputEvent event_from_json(const ojson& j, const ClientId& source) {
  const std::string path = "event";
  const std::string kind = get<std::string>(j, "kind", path);
  if (kind == "transcript") return TranscriptEvent{get<std::string>(j, "text", path), source};
  if (kind == "tap") return TapEvent{source};
  if (kind == "touch") {
    Vec3 p = vec3_from_json(member(j, "position", path), path + ".position");
    if (!is_finite(p)) throw SchemaError(path + ".position", "coordinates must be finite");
    return TouchEvent{p, source};
  }
  throw SchemaError(path + ".kind", "unknown event kind '" + kind + "'");
}

ojson issue_to_json(const ValidationIssue& issue) {
  return {{"step", issue.step},
          {"severity", issue.severity == Severity::Error ? "error" : "warning"},
          {"code", std::string(to_string(issue.code))},
          {"path", issue.path},
          {"message", issue.message}};
}

ojson issues_to_json(const std::vector<ValidationIssue>& issues) {
  ojson out = ojson::array();
  for (const auto& i : issues) out.push_back(issue_to_json(i));
  return out;
}

}  // namespace loomcast
