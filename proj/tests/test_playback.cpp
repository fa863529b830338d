#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "loomcast/authoring.hpp"
#include "loomcast/playback.hpp"
#include "loomcast/transcript.hpp"
#include "support.hpp"

using namespace loomcast;

namespace {

PlaybackSession simulated(const Story& s) { return start_session(s, DeviceRegistry::simulated_for(s)); }

std::vector<InputEvent> fixture_events(const std::string& name) {
  std::istringstream in(support::read_file(support::fixture_path(name, ".transcript")));
  return parse_transcript(in, "narrator");
}

// Compares the simulated drivers' observed state with the session world.
void expect_devices_match(PlaybackSession& session) {
  session.devices().flush();
  const auto& registry = session.devices().registry();
  for (const auto& d : session.story().devices) {
    if (auto* l = registry.find_as<SimulatedLight>(d.id)) EXPECT_EQ(l->state(), session.world().lights.at(d.id)) << d.id;
    if (auto* f = registry.find_as<SimulatedFan>(d.id)) EXPECT_EQ(f->state(), session.world().fans.at(d.id)) << d.id;
    if (auto* sp = registry.find_as<SimulatedSpeaker>(d.id)) {
      EXPECT_EQ(sp->state(), session.world().speakers.at(d.id)) << d.id;
    }
  }
}

InputEvent random_event(const Story& s, const WorldState& world, std::mt19937_64& rng) {
  const int choice = std::uniform_int_distribution<int>(0, 3)(rng);
  if (choice == 0) return TapEvent{"c"};
  if (choice == 1) {
    std::vector<std::string> phrases{"nothing to see here"};
    for (const auto& step : s.steps) {
      if (const auto* kw = std::get_if<KeywordTrigger>(&step.trigger)) phrases.push_back("and then " + kw->phrase);
    }
    return TranscriptEvent{phrases[std::uniform_int_distribution<std::size_t>(0, phrases.size() - 1)(rng)], "c"};
  }
  std::vector<Vec3> spots{{9, 9, 9}};
  for (const auto& [id, a] : world.assets) {
    if (a.present) spots.push_back(a.position);
  }
  return TouchEvent{spots[std::uniform_int_distribution<std::size_t>(0, spots.size() - 1)(rng)], "c"};
}

class FailingLight final : public DeviceDriver {
 public:
  DeviceKind kind() const override { return DeviceKind::Light; }
  std::string_view family() const override { return "failing"; }
  DeviceState apply(const CommandPayload&) override { throw Timeout("lamp did not answer"); }
};

}  // namespace

TEST(Playback, GoodnightStartsArmedOnFirstKeyword) {
  PlaybackSession session = simulated(build_fixture(Fixture::GoodnightMoon));
  EXPECT_EQ(session.cursor(), -1);
  ASSERT_NE(session.armed(), nullptr);
  EXPECT_EQ(std::get<KeywordTrigger>(session.armed()->trigger()).phrase, "small, cozy room");
  EXPECT_EQ(session.world(), effective_state(session.story(), -1));
}

TEST(Playback, StartIssuesInitialDeviceState) {
  PlaybackSession session = simulated(build_fixture(Fixture::WindAndSun));
  EXPECT_EQ(session.opening().device_commands.front(), full_command("fan", FanState{}));
  expect_devices_match(session);
  EXPECT_EQ(session.devices().registry().find_as<SimulatedLight>("sun_lamp")->state().brightness_pct, 30);
}

TEST(Playback, SystemNarrationQueuedAtStart) {
  const Story s = build_fixture(Fixture::WindAndSun);
  PlaybackSession session = simulated(s);
  ASSERT_TRUE(std::holds_alternative<TapTrigger>(session.armed()->trigger()));
  EXPECT_EQ(session.opening().narration_to_speak, s.initial.narration);
  session.devices().flush();
  const auto spoken = session.devices().registry().find_as<SimulatedSpeaker>("speaker")->spoken();
  EXPECT_EQ(spoken, std::vector<std::string>{*s.initial.narration});
}

TEST(Playback, EmptyStoryIsFinishedAtStart) {
  Story s;
  s.devices = {{"lamp", DeviceKind::Light, "Lamp", {}}};
  PlaybackSession session = simulated(s);
  EXPECT_TRUE(session.finished());
  EXPECT_EQ(session.armed(), nullptr);
  EXPECT_THROW(session.handle_event(TapEvent{}), SessionFinished);
}

TEST(Playback, GoodnightTranscriptFiresElevenTransitions) {
  PlaybackSession session = simulated(build_fixture(Fixture::GoodnightMoon));
  int transitions = 0;
  for (const auto& e : fixture_events("goodnight_moon")) {
    if (session.finished()) break;
    if (auto r = session.handle_event(e)) {
      ++transitions;
      EXPECT_EQ(r->entered_scene, transitions - 1);
      EXPECT_EQ(r->finished, r->entered_scene == 10);
    }
  }
  EXPECT_EQ(transitions, 11);
  EXPECT_TRUE(session.finished());
  EXPECT_EQ(session.log().size(), 11u);
}

TEST(Playback, TapWhileKeywordArmedDoesNothing) {
  PlaybackSession session = simulated(build_fixture(Fixture::GoodnightMoon));
  EXPECT_FALSE(session.handle_event(TapEvent{}));
  EXPECT_EQ(session.cursor(), -1);
}

TEST(Playback, FranklinTouchFlickersTheLight) {
  const Story s = build_fixture(Fixture::BenjaminFranklin);
  PlaybackSession session = simulated(s);
  session.goto_scene(4);
  ASSERT_TRUE(std::holds_alternative<TouchTrigger>(session.armed()->trigger()));
  EXPECT_FALSE(session.handle_event(TouchEvent{{1.4, 1.2, 0.1}, "actor"}));
  const auto r = session.handle_event(TouchEvent{{0.4, 1.25, 0.1}, "actor"});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->entered_scene, 5);
  EXPECT_TRUE(r->finished);
  const DeviceCommand flicker{"ceiling_light", LightFields{.effect = "flickering"}};
  EXPECT_EQ(r->device_commands, std::vector<DeviceCommand>{flicker});
  ASSERT_FALSE(r->plan.effects.empty());
  EXPECT_EQ(std::get<DeviceCue>(r->plan.effects[0]).command, flicker);
  EXPECT_EQ(session.log().back().matched, "key");
  EXPECT_EQ(session.log().back().event_kind, "touch");
}

TEST(Playback, GotoScene) {
  const Story s = build_fixture(Fixture::GoodnightMoon);
  PlaybackSession session = simulated(s);
  const auto r = session.goto_scene(2);
  EXPECT_TRUE(r.plan.empty());
  EXPECT_EQ(session.world().lights.at("lamp").brightness_pct, 20);
  EXPECT_TRUE(session.world().assets.at("red_balloon").present);
  EXPECT_EQ(session.world().speakers.at("speaker").sound, std::optional<std::string>("lullaby"));
  expect_devices_match(session);
  EXPECT_EQ(std::get<KeywordTrigger>(session.armed()->trigger()).phrase, "cow jumping over the moon");

  session.goto_scene(-1);
  EXPECT_EQ(session.world(), effective_state(s, -1));
  expect_devices_match(session);
  EXPECT_THROW(session.goto_scene(99), IndexOutOfRange);
  EXPECT_EQ(session.cursor(), -1);
}

TEST(Playback, JumpsAreIndependentOfPath) {
  const Story s = build_fixture(Fixture::WindAndSun);
  for (int k = -1; k <= s.last_index(); ++k) {
    PlaybackSession direct = simulated(s);
    direct.goto_scene(k);
    PlaybackSession stepped = simulated(s);
    for (int i = 0; i <= k; ++i) ASSERT_TRUE(stepped.handle_event(TapEvent{}));
    EXPECT_EQ(direct.world(), stepped.world()) << k;
    expect_devices_match(direct);
    expect_devices_match(stepped);
  }
}

TEST(Playback, SystemNarrationIsSpokenVerbatim) {
  const Story s = build_fixture(Fixture::WindAndSun);
  PlaybackSession session = simulated(s);
  std::vector<std::string> expected{*s.initial.narration};
  while (!session.finished()) {
    const auto r = session.handle_event(TapEvent{"anyone"});
    ASSERT_TRUE(r);
    const auto& narration = s.steps[static_cast<std::size_t>(r->entered_scene)].scene.narration;
    EXPECT_EQ(r->narration_to_speak, narration);
    expected.push_back(*narration);
  }
  session.devices().flush();
  EXPECT_EQ(session.devices().registry().find_as<SimulatedSpeaker>("speaker")->spoken(), expected);
}

TEST(Playback, UserModeNarrationIsNotSpoken) {
  Story s = build_fixture(Fixture::GoodnightMoon);
  s.steps[0].scene.narration = "In the great green room";
  PlaybackSession session = simulated(s);
  const auto r = session.handle_event(TranscriptEvent{"small cozy room", "n"});
  ASSERT_TRUE(r);
  EXPECT_FALSE(r->narration_to_speak);
  session.devices().flush();
  EXPECT_TRUE(session.devices().registry().find_as<SimulatedSpeaker>("speaker")->spoken().empty());
}

TEST(Playback, ReadingAheadReportsMissedCue) {
  PlaybackSession session = simulated(build_fixture(Fixture::GoodnightMoon));
  EXPECT_FALSE(session.handle_event(TranscriptEvent{"Goodnight moon", "n"}));
  EXPECT_EQ(session.cursor(), -1);
  const auto diagnostics = session.take_diagnostics();
  ASSERT_EQ(diagnostics.size(), 1u);
  EXPECT_NE(diagnostics[0].find("missed cue"), std::string::npos);
  EXPECT_NE(diagnostics[0].find("goodnight moon"), std::string::npos);
}

TEST(Playback, DeviceFailureDoesNotHaltTheStory) {
  const Story s = build_fixture(Fixture::GoodnightMoon);
  DeviceRegistry registry = DeviceRegistry::simulated_for(s);
  registry.bind("lamp", std::make_unique<FailingLight>());
  PlaybackSession session = start_session(s, std::move(registry));
  const auto r = session.handle_event(TranscriptEvent{"in the small cozy room", "n"});
  ASSERT_TRUE(r);
  EXPECT_EQ(session.cursor(), 0);
  session.devices().flush();
  const auto diagnostics = session.take_diagnostics();
  ASSERT_FALSE(diagnostics.empty());
  EXPECT_NE(diagnostics.back().find("lamp"), std::string::npos);
}

TEST(Playback, StartRejectsInvalidStoriesAndMissingDrivers) {
  Story bad = build_fixture(Fixture::GoodnightMoon);
  bad.steps[1].trigger = TouchTrigger{"moon"};
  EXPECT_THROW(simulated(bad), InvalidStory);

  DeviceRegistry none;
  none.set_fallback_to_simulated(false);
  EXPECT_THROW(start_session(build_fixture(Fixture::GoodnightMoon), std::move(none)), DriverUnavailable);
}

TEST(Playback, CoherentDeterministicAndNeverSkips) {
  std::mt19937_64 story_rng(41);
  for (int n = 0; n < 60; ++n) {
    const Story s = support::random_story(story_rng);
    std::mt19937_64 event_rng(static_cast<std::uint64_t>(n));

    PlaybackSession a = simulated(s);
    std::vector<InputEvent> events;
    std::vector<std::optional<TransitionResult>> results;
    for (int i = 0; i < 80 && !a.finished(); ++i) {
      const InputEvent e = random_event(s, a.world(), event_rng);
      const int before = a.cursor();
      results.push_back(a.handle_event(e));
      events.push_back(e);
      ASSERT_LE(a.cursor() - before, 1);
      ASSERT_EQ(a.world(), support::oracle_fold(s, a.cursor()));
      if (a.finished()) {
        EXPECT_EQ(a.armed(), nullptr);
      } else {
        ASSERT_NE(a.armed(), nullptr);
        EXPECT_EQ(a.armed()->trigger(), s.steps[static_cast<std::size_t>(a.cursor() + 1)].trigger);
      }
    }
    expect_devices_match(a);

    PlaybackSession b = simulated(s);
    for (std::size_t i = 0; i < events.size(); ++i) ASSERT_EQ(b.handle_event(events[i]), results[i]);
    EXPECT_EQ(a.export_log(), b.export_log());
  }
}

TEST(Playback, LogRecordsMatchedPhrases) {
  PlaybackSession session = simulated(build_fixture(Fixture::GoodnightMoon));
  session.handle_event(TranscriptEvent{"noise", "n"});
  session.handle_event(TranscriptEvent{"In the small, cozy room", "n"});
  EXPECT_EQ(session.export_log(), "{\"timestamp\":2,\"step\":0,\"event\":\"transcript\",\"matched\":\"small, cozy room\"}\n");
}

TEST(Playback, InjectedClockStampsRecords) {
  PlaybackOptions options;
  options.clock = [] { return std::int64_t{1700000000}; };
  const Story s = build_fixture(Fixture::WindAndSun);
  PlaybackSession session = start_session(s, DeviceRegistry::simulated_for(s), options);
  session.handle_event(TapEvent{});
  EXPECT_EQ(session.log().front().timestamp, 1700000000);
}
