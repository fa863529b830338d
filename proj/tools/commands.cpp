#include "loomcast/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "loomcast/authoring.hpp"
#include "loomcast/format.hpp"
#include "loomcast/transcript.hpp"
#include "loomcast/wire.hpp"

namespace loomcast {
namespace {

struct LoadFailure {
  int code;
};

std::string quoted(const std::string& s) {
  std::ostringstream o;
  o << std::quoted(s);
  return o.str();
}

ParsedStory load(const std::string& arg, const ParseOptions& options, std::ostream& err) {
  const auto path = resolve_story_path(arg);
  if (!std::filesystem::is_regular_file(path)) {
    err << path.string() << ": no such story file\n";
    throw LoadFailure{kExitRuntime};
  }
  try {
    return load_story_file(path, options);
  } catch (const SyntaxError& e) {
    err << path.string() << ":" << e.line() << ":" << e.column() << ": " << e.what() << "\n";
  } catch (const SchemaError& e) {
    err << path.string() << ": error: " << e.path() << ": " << e.what() << "\n";
  } catch (const SemanticError& e) {
    for (const auto& issue : e.issues()) err << path.string() << ": " << format_issue(issue) << "\n";
  } catch (const Error& e) {
    err << e.what() << "\n";
    throw LoadFailure{kExitRuntime};
  }
  throw LoadFailure{kExitInvalid};
}

std::string describe(const Trigger& trigger) {
  if (const auto* kw = std::get_if<KeywordTrigger>(&trigger)) return "keyword " + quoted(kw->phrase);
  if (const auto* t = std::get_if<TouchTrigger>(&trigger)) {
    std::ostringstream o;
    o << "touch " << t->target << " within " << t->threshold_m << " m";
    return o.str();
  }
  return "tap";
}

std::string describe(const Vec3& v) {
  std::ostringstream o;
  o << "(" << v.x << ", " << v.y << ", " << v.z << ")";
  return o.str();
}

std::string describe(const AnimationEffect& effect) {
  struct Visitor {
    std::string operator()(const FadeIn& e) const {
      std::ostringstream o;
      o << "fade in " << e.asset << " at " << describe(e.end.position) << " over " << e.duration_s << " s";
      return o.str();
    }
    std::string operator()(const FadeOut& e) const {
      std::ostringstream o;
      o << "fade out " << e.asset << " over " << e.duration_s << " s";
      return o.str();
    }
    std::string operator()(const Translate& e) const {
      std::ostringstream o;
      o << "move " << e.asset << " " << describe(e.from) << " -> " << describe(e.to) << " over " << e.duration_s
        << " s";
      return o.str();
    }
    std::string operator()(const AssetCue& e) const {
      return "asset " + e.asset + " " + asset_state_to_json(e.end).dump();
    }
    std::string operator()(const DeviceCue& e) const {
      ojson j = command_to_json(e.command);
      return "cue " + e.command.target + " " + j["set"].dump();
    }
  };
  return std::visit(Visitor{}, effect);
}

void print_world(const Story& story, const WorldState& world, std::ostream& out) {
  for (const auto& d : story.devices) {
    if (auto state = world.device(d.id)) {
      out << "  " << d.id << " (" << to_string(d.kind) << ") " << device_state_to_json(*state).dump() << "\n";
    }
  }
  for (const auto& a : story.assets) {
    auto it = world.assets.find(a.id);
    if (it == world.assets.end()) continue;
    if (it->second.present) {
      out << "  " << a.id << " at " << describe(it->second.position);
      if (it->second.anchor) out << " anchored to " << *it->second.anchor;
      if (it->second.effect) out << " effect " << *it->second.effect;
      out << "\n";
    } else {
      out << "  " << a.id << " absent\n";
    }
  }
}

DeviceRegistry drivers_for(const PlayOptions& options, const Story& story) {
  if (options.simulate) return DeviceRegistry::simulated_for(story);
  std::optional<std::string> map = options.device_map;
  if (!map) {
    if (const char* env = std::getenv("LOOMCAST_DEVICE_MAP"); env != nullptr && *env != '\0') map = env;
  }
  if (map) return load_device_map(*map);
  DeviceRegistry none;
  none.set_fallback_to_simulated(false);
  return none;
}

}  // namespace

int cmd_validate(const std::string& story, bool lenient, std::ostream& out, std::ostream& err) {
  try {
    ParsedStory parsed = load(story, ParseOptions{!lenient}, err);
    for (const auto& issue : parsed.issues) out << format_issue(issue) << "\n";
    out << parsed.story.steps.size() << " steps\n";
    return kExitOk;
  } catch (const LoadFailure& f) {
    return f.code;
  }
}

int cmd_inspect(const std::string& story, std::optional<int> scene, std::ostream& out, std::ostream& err) {
  try {
    const Story s = load(story, ParseOptions{}, err).story;
    out << s.title << " (" << to_string(s.narrator_mode) << " narrator, " << s.steps.size() << " steps)\n";
    if (!s.actors.empty()) {
      out << "actors:";
      for (const auto& a : s.actors) out << " " << quoted(a);
      out << "\n";
    }
    out << "devices:\n";
    for (const auto& d : s.devices) {
      out << "  " << d.id << " " << to_string(d.kind) << " " << quoted(d.name) << " at " << describe(d.position) << "\n";
    }
    out << "assets:\n";
    for (const auto& a : s.assets) {
      out << "  " << a.id << " " << a.model << " half extent " << a.half_extent_m << " m\n";
    }
    auto print_scene = [&](const Scene& sc) {
      for (const auto& b : sc.behaviors) out << "    " << behavior_to_json(b).dump() << "\n";
      if (sc.narration) out << "    narration " << quoted(*sc.narration) << "\n";
    };
    out << "initial:\n";
    print_scene(s.initial);
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
      out << "step " << i << ": " << describe(s.steps[i].trigger) << "\n";
      print_scene(s.steps[i].scene);
    }
    if (scene) {
      WorldState world = effective_state(s, *scene);
      out << "world at scene " << *scene << ":\n";
      print_world(s, world, out);
    }
    return kExitOk;
  } catch (const LoadFailure& f) {
    return f.code;
  } catch (const IndexOutOfRange& e) {
    err << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_play(const PlayOptions& options, std::istream& in, std::ostream& out, std::ostream& err) {
  Story story;
  try {
    story = load(options.story, ParseOptions{}, err).story;
  } catch (const LoadFailure& f) {
    return f.code;
  }

  std::optional<PlaybackSession> session;
  try {
    session.emplace(start_session(story, drivers_for(options, story)));
  } catch (const DriverUnavailable& e) {
    err << e.what() << "; pass --simulate or --devices\n";
    return kExitRuntime;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitRuntime;
  }

  std::ifstream file;
  std::istream* events = &in;
  const bool interactive = !options.transcript;
  if (options.transcript && *options.transcript != "-") {
    file.open(*options.transcript);
    if (!file) {
      err << *options.transcript << ": cannot read transcript\n";
      return kExitRuntime;
    }
    events = &file;
  }

  out << story.title << ": " << story.steps.size() << " steps, " << to_string(story.narrator_mode) << " narrator\n";
  if (session->opening().narration_to_speak) out << "  narration " << quoted(*session->opening().narration_to_speak) << "\n";

  auto report_diagnostics = [&] {
    for (const auto& d : session->take_diagnostics()) err << "diagnostic: " << d << "\n";
  };

  int transitions = 0;
  std::string line;
  std::size_t line_number = 0;
  while (!session->finished()) {
    if (interactive) {
      out << "step " << session->cursor() + 1 << " armed: " << describe(session->armed()->trigger()) << "\n> "
          << std::flush;
    }
    if (!std::getline(*events, line)) break;
    ++line_number;

    InputEvent event;
    try {
      event = parse_transcript_line(line, "cli", line_number);
    } catch (const TranscriptError& e) {
      err << e.what() << "\n";
      return kExitRuntime;
    }
    auto result = session->handle_event(event);
    report_diagnostics();
    if (!result) continue;

    ++transitions;
    const auto& record = session->log().back();
    out << "transition " << transitions << ": scene " << result->entered_scene << " <- " << record.event_kind;
    if (!record.matched.empty()) out << " " << quoted(record.matched);
    out << "\n";
    for (const auto& effect : result->plan.effects) out << "  " << describe(effect) << "\n";
    if (result->narration_to_speak) out << "  narration " << quoted(*result->narration_to_speak) << "\n";
  }

  session->devices().flush();
  report_diagnostics();

  if (options.log_path) {
    std::ofstream log(*options.log_path, std::ios::binary);
    log << session->export_log();
    if (!log) {
      err << *options.log_path << ": cannot write log\n";
      return kExitRuntime;
    }
  }

  out << "final state:\n";
  print_world(story, session->world(), out);
  if (!session->finished()) {
    out << "incomplete: stalled at step " << session->cursor() + 1 << " waiting for "
        << describe(session->armed()->trigger()) << "\n";
    return kExitIncomplete;
  }
  out << "finished after " << transitions << " transitions\n";
  return kExitOk;
}

int cmd_fixture(const std::vector<std::string>& names, const std::optional<std::string>& out_dir, std::ostream& out,
                std::ostream& err) {
  std::vector<Fixture> chosen;
  for (const auto& name : names) {
    auto f = fixture_from_name(name);
    if (!f) {
      err << "unknown fixture '" << name << "'\n";
      return kExitInvalid;
    }
    chosen.push_back(*f);
  }
  if (names.empty()) chosen.assign(std::begin(kAllFixtures), std::end(kAllFixtures));

  for (Fixture f : chosen) {
    const std::string text = serialize_story(build_fixture(f));
    if (!out_dir) {
      out << text;
      continue;
    }
    const auto path = std::filesystem::path(*out_dir) / (std::string(fixture_name(f)) + std::string(kStoryExtension));
    std::ofstream file(path, std::ios::binary);
    file << text;
    if (!file) {
      err << path.string() << ": cannot write\n";
      return kExitRuntime;
    }
    out << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

}  // namespace loomcast
