#include <gtest/gtest.h>

#include <barrier>
#include <random>
#include <thread>

#include "loomcast/authoring.hpp"
#include "loomcast/session.hpp"
#include "loomcast/wire.hpp"
#include "support.hpp"

using namespace loomcast;

namespace {

// Collects messages delivered to one client.
class Inbox {
 public:
  MessageSink sink() {
    return [this](const ojson& m) {
      std::lock_guard lock(mutex_);
      messages_.push_back(m);
    };
  }
  std::vector<ojson> messages() {
    std::lock_guard lock(mutex_);
    return messages_;
  }
  std::vector<ojson> of_type(const std::string& type) {
    std::vector<ojson> out;
    for (auto& m : messages()) {
      if (m["type"] == type) out.push_back(m);
    }
    return out;
  }
  ClientMirror mirror() {
    ClientMirror m;
    for (const auto& msg : messages()) m.apply(msg);
    return m;
  }

 private:
  std::mutex mutex_;
  std::vector<ojson> messages_;
};

std::unique_ptr<LiveSession> live(const Story& s, const std::string& id = "s") {
  return std::make_unique<LiveSession>(id, s, DeviceRegistry::simulated_for(s));
}

// The event that fires the next trigger, sent by the client allowed to send it.
InputEvent firing_event(LiveSession& session, const Story& s) {
  const Trigger& t = s.steps[static_cast<std::size_t>(session.cursor() + 1)].trigger;
  if (const auto* kw = std::get_if<KeywordTrigger>(&t)) return TranscriptEvent{"and so " + kw->phrase + " it was", ""};
  if (const auto* touch = std::get_if<TouchTrigger>(&t)) return TouchEvent{session.world().assets.at(touch->target).position, ""};
  return TapEvent{""};
}

void claim_required_roles(LiveSession& session, const Story& s, std::vector<std::unique_ptr<Inbox>>& inboxes) {
  if (s.narrator_mode == NarratorMode::System) return;
  auto add = [&](const std::string& client, const Role& role) {
    inboxes.push_back(std::make_unique<Inbox>());
    session.join(client, inboxes.back()->sink());
    ASSERT_TRUE(session.claim_role(client, role).ok);
  };
  add("narrator", Role::narrator());
  for (std::size_t i = 0; i < s.actors.size(); ++i) add("actor" + std::to_string(i), Role::actor_named(s.actors[i]));
}

}  // namespace

TEST(Session, FirstJoinSeesTheStart) {
  auto session = live(build_fixture(Fixture::GoodnightMoon));
  Inbox inbox;
  const ojson snap = session->join("a", inbox.sink());
  EXPECT_EQ(snap["type"], "snapshot");
  EXPECT_EQ(snap["cursor"], -1);
  EXPECT_EQ(snap["seq"], 1);
  EXPECT_EQ(inbox.messages().front(), snap);
  EXPECT_EQ(session->roles().at("a"), Role::audience());
}

TEST(Session, UnknownSessionId) {
  SessionHub hub;
  const std::string id = hub.create(build_fixture(Fixture::WindAndSun), DeviceRegistry{});
  EXPECT_EQ(hub.find(id)->id(), id);
  EXPECT_THROW(hub.find("nope"), UnknownSession);
  EXPECT_EQ(hub.ids(), std::vector<std::string>{id});
}

TEST(Session, LateJoinerConvergesOnFranklin) {
  const Story s = build_fixture(Fixture::BenjaminFranklin);
  auto session = live(s);
  std::vector<std::unique_ptr<Inbox>> crew;
  claim_required_roles(*session, s, crew);
  ASSERT_TRUE(session->started());
  Inbox& early = *crew[0];
  for (int i = 0; i < 4; ++i) {
    session->submit_event("narrator", firing_event(*session, s));
  }
  ASSERT_EQ(session->cursor(), 3);
  Inbox late;
  const ojson snap = session->join("late", late.sink());
  EXPECT_EQ(snap["cursor"], 3);
  EXPECT_EQ(world_from_json(snap["world"]), support::oracle_fold(s, 3));

  session->submit_event("narrator", firing_event(*session, s));
  session->submit_event("actor0", firing_event(*session, s));
  EXPECT_TRUE(session->finished());
  const ClientMirror a = early.mirror();
  const ClientMirror b = late.mirror();
  EXPECT_EQ(a.cursor(), 5);
  EXPECT_EQ(b.cursor(), 5);
  EXPECT_EQ(a.world(), b.world());
  EXPECT_EQ(a.world(), support::oracle_fold(s, 5));
  EXPECT_EQ(b.transitions(), (std::vector<int>{4, 5}));
}

TEST(Session, LateJoinersConvergeOnGeneratedStories) {
  std::mt19937_64 rng(71);
  for (int n = 0; n < 60; ++n) {
    const Story s = support::random_story(rng);
    if (s.steps.empty()) continue;
    auto session = live(s);
    std::vector<std::unique_ptr<Inbox>> crew;
    claim_required_roles(*session, s, crew);
    Inbox early, late;
    session->join("early", early.sink());
    const int join_at = std::uniform_int_distribution<int>(-1, s.last_index())(rng);
    if (join_at == -1) session->join("late", late.sink());
    while (!session->finished()) {
      const InputEvent e = firing_event(*session, s);
      const ClientId from = std::holds_alternative<TranscriptEvent>(e) ? "narrator" : "early";
      ASSERT_TRUE(session->submit_event(from, e).accepted);
      if (session->cursor() == join_at) session->join("late", late.sink());
    }
    const ClientMirror a = early.mirror();
    const ClientMirror b = late.mirror();
    ASSERT_EQ(a.world(), b.world()) << n;
    ASSERT_EQ(a.world(), support::oracle_fold(s, s.last_index()));
    ASSERT_EQ(b.cursor(), s.last_index());
  }
}

TEST(Session, ConcurrentNarratorClaimsHaveOneWinner) {
  constexpr int kClients = 8;
  const Story s = build_fixture(Fixture::GoodnightMoon);
  for (int trial = 0; trial < 100; ++trial) {
    auto session = live(s);
    std::vector<Inbox> inboxes(kClients);
    for (int c = 0; c < kClients; ++c) session->join("c" + std::to_string(c), inboxes[c].sink());
    std::barrier start(kClients);
    std::atomic<int> winners{0};
    std::vector<std::thread> threads;
    for (int c = 0; c < kClients; ++c) {
      threads.emplace_back([&, c] {
        start.arrive_and_wait();
        if (session->claim_role("c" + std::to_string(c), Role::narrator()).ok) ++winners;
      });
    }
    for (auto& t : threads) t.join();
    ASSERT_EQ(winners.load(), 1) << trial;
    int narrators = 0;
    for (const auto& [client, role] : session->roles()) narrators += role == Role::narrator();
    ASSERT_EQ(narrators, 1);
  }
}

TEST(Session, RolesFollowTheStory) {
  const Story s = build_fixture(Fixture::BenjaminFranklin);
  auto session = live(s);
  std::vector<Inbox> inboxes(8);
  for (int c = 0; c < 8; ++c) session->join("c" + std::to_string(c), inboxes[c].sink());
  EXPECT_FALSE(session->claim_role("c0", Role::actor_named("Thomas Edison")).ok);
  EXPECT_TRUE(session->claim_role("c0", Role::narrator()).ok);
  EXPECT_FALSE(session->claim_role("c1", Role::narrator()).ok);
  EXPECT_EQ(inboxes[1].of_type("role_result").back()["ok"], false);
  EXPECT_FALSE(session->started());
  EXPECT_TRUE(session->claim_role("c1", Role::actor_named("Benjamin Franklin")).ok);
  EXPECT_FALSE(session->started());
  EXPECT_TRUE(session->claim_role("c2", Role::actor_named("Benjamin Franklin Jr.")).ok);
  EXPECT_TRUE(session->started());
  for (int c = 3; c < 8; ++c) EXPECT_TRUE(session->claim_role("c" + std::to_string(c), Role::audience()).ok);
  EXPECT_FALSE(session->claim_role("c0", Role::audience()).ok) << "no narrator handoff once started";
  EXPECT_EQ(inboxes[7].of_type("roles").back()["started"], true);
  EXPECT_FALSE(session->claim_role("stranger", Role::audience()).ok);
}

TEST(Session, EventsBeforeStartThrow) {
  auto session = live(build_fixture(Fixture::BenjaminFranklin));
  Inbox inbox;
  session->join("a", inbox.sink());
  EXPECT_THROW(session->submit_event("a", TapEvent{"a"}), NotStarted);
  EXPECT_EQ(inbox.of_type("event_result").back()["reason"], "not started");
}

TEST(Session, TranscriptsAreNarratorOnly) {
  const Story s = build_fixture(Fixture::GoodnightMoon);
  auto session = live(s);
  Inbox n, a;
  session->join("n", n.sink());
  session->join("a", a.sink());
  session->claim_role("n", Role::narrator());
  const SubmitResult r = session->submit_event("a", TranscriptEvent{"in the great green room a small, cozy room", "a"});
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.reason, "narrator only");
  EXPECT_EQ(session->cursor(), -1);
  EXPECT_TRUE(session->submit_event("n", TranscriptEvent{"a small, cozy room", "n"}).accepted);
  EXPECT_EQ(session->cursor(), 0);
  EXPECT_FALSE(session->submit_event("ghost", TapEvent{}).accepted);
}

TEST(Session, TouchFromAnActorReachesEveryone) {
  const Story s = build_fixture(Fixture::BenjaminFranklin);
  auto session = live(s);
  std::vector<std::unique_ptr<Inbox>> crew;
  claim_required_roles(*session, s, crew);
  Inbox audience;
  session->join("aud", audience.sink());
  for (int i = 0; i < 5; ++i) session->submit_event("narrator", firing_event(*session, s));
  session->submit_event("actor1", TouchEvent{{0.4, 1.2, 0.1}, ""});
  EXPECT_TRUE(session->finished());
  for (Inbox* inbox : {crew[0].get(), crew[1].get(), crew[2].get(), &audience}) {
    const auto t = inbox->of_type("transition").back();
    EXPECT_EQ(t["entered_scene"], 5);
    EXPECT_EQ(t["event"], "touch");
  }
}

TEST(Session, TapsAdvanceSystemStoriesFromAnyone) {
  const Story s = build_fixture(Fixture::WindAndSun);
  auto session = live(s);
  std::vector<Inbox> inboxes(3);
  for (int c = 0; c < 3; ++c) session->join("c" + std::to_string(c), inboxes[c].sink());
  EXPECT_TRUE(session->started());
  for (int i = 0; i <= s.last_index(); ++i) session->submit_event("c" + std::to_string(i % 3), TapEvent{});
  EXPECT_TRUE(session->finished());
  const auto last = inboxes[0].of_type("transition").back();
  EXPECT_EQ(last["narration"], *s.steps.back().scene.narration);
  EXPECT_EQ(last["finished"], true);
  EXPECT_EQ(session->submit_event("c0", TapEvent{}).reason, "story finished");
}

TEST(Session, EveryClientSeesTheSameOrder) {
  const Story s = build_fixture(Fixture::WindAndSun);
  auto session = live(s);
  constexpr int kClients = 5;
  std::vector<Inbox> inboxes(kClients);
  for (int c = 0; c < kClients; ++c) session->join("c" + std::to_string(c), inboxes[c].sink());
  std::vector<std::thread> threads;
  for (int c = 0; c < kClients; ++c) {
    threads.emplace_back([&, c] {
      for (int i = 0; i < 4; ++i) session->submit_event("c" + std::to_string(c), TapEvent{});
    });
  }
  for (auto& t : threads) t.join();
  std::vector<std::pair<std::int64_t, int>> reference;
  for (const auto& m : inboxes[0].of_type("transition")) reference.emplace_back(m["seq"], m["entered_scene"]);
  EXPECT_EQ(reference.size(), s.steps.size());
  for (int c = 0; c < kClients; ++c) {
    std::vector<std::pair<std::int64_t, int>> seen;
    std::int64_t last = 0;
    for (const auto& m : inboxes[c].messages()) {
      ASSERT_GT(m["seq"].get<std::int64_t>(), last);
      last = m["seq"];
      if (m["type"] == "transition") seen.emplace_back(m["seq"], m["entered_scene"]);
    }
    EXPECT_EQ(seen, reference);
  }
}

TEST(Session, RejoinKeepsTheRoleAfterStart) {
  const Story s = build_fixture(Fixture::GoodnightMoon);
  auto session = live(s);
  Inbox first, second;
  session->join("n", first.sink());
  session->claim_role("n", Role::narrator());
  session->leave("n");
  EXPECT_EQ(session->roles().at("n"), Role::narrator());
  session->join("n", second.sink());
  EXPECT_TRUE(session->submit_event("n", TranscriptEvent{"small, cozy room", ""}).accepted);
  EXPECT_EQ(second.of_type("transition").size(), 1u);
  EXPECT_TRUE(first.of_type("transition").empty());
}

TEST(Session, MirrorRejectsOutOfOrderMessages) {
  ClientMirror m;
  EXPECT_THROW(m.apply(ojson{{"seq", 1}, {"type", "transition"}}), Error);
  ClientMirror n;
  n.apply(ojson{{"seq", 2}, {"type", "snapshot"}, {"cursor", -1}, {"world", world_to_json(WorldState{})}});
  EXPECT_THROW(n.apply(ojson{{"seq", 2}, {"type", "diagnostic"}}), Error);
}

TEST(Session, MismatchedDriverKindRefusesToStart) {
  Story s = build_fixture(Fixture::WindAndSun);
  DeviceRegistry drivers;
  drivers.set_fallback_to_simulated(false);
  drivers.bind("fan", make_simulated(DeviceKind::Fan));
  drivers.bind("sun_lamp", make_simulated(DeviceKind::Light));
  drivers.bind("speaker", make_simulated(DeviceKind::Light));  // wrong kind on purpose
  EXPECT_THROW(LiveSession("x", s, std::move(drivers)), DriverUnavailable);
}

TEST(Session, RoleJson) {
  for (const Role& r : {Role::narrator(), Role::audience(), Role::actor_named("Benjamin Franklin")}) {
    EXPECT_EQ(role_from_json(role_to_json(r)), r);
  }
  EXPECT_EQ(to_string(Role::actor_named("Ben")), "actor:Ben");
  EXPECT_THROW(role_from_json(ojson{{"kind", "director"}}), SchemaError);
  EXPECT_THROW(role_from_json(ojson{{"kind", "actor"}}), SchemaError);
}
