#include "loomcast/session.hpp"

#include <algorithm>

#include "loomcast/wire.hpp"

namespace loomcast {

std::string to_string(const Role& role) {
  switch (role.kind) {
    case Role::Kind::Narrator:
      return "narrator";
    case Role::Kind::Actor:
      return "actor:" + role.actor;
    case Role::Kind::Audience:
      return "audience";
  }
  return "audience";
}

ojson role_to_json(const Role& role) {
  switch (role.kind) {
    case Role::Kind::Narrator:
      return {{"kind", "narrator"}};
    case Role::Kind::Actor:
      return {{"kind", "actor"}, {"name", role.actor}};
    case Role::Kind::Audience:
      break;
  }
  return {{"kind", "audience"}};
}

Role role_from_json(const ojson& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw SchemaError("role.kind", "expected a string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "narrator") return Role::narrator();
  if (kind == "audience") return Role::audience();
  if (kind == "actor") {
    if (!j.contains("name") || !j["name"].is_string()) throw SchemaError("role.name", "expected a string");
    return Role::actor_named(j["name"].get<std::string>());
  }
  throw SchemaError("role.kind", "unknown role '" + kind + "'");
}

// LiveSession

LiveSession::LiveSession(std::string id, Story story, DeviceRegistry drivers, PlaybackOptions options)
    : id_(std::move(id)),
      playback_(std::make_unique<PlaybackSession>(start_session(std::move(story), std::move(drivers), std::move(options)))) {
  update_started();
}

LiveSession::~LiveSession() {
  loop_.drain();
}

ojson LiveSession::stamp(ojson message) {
  ojson out{{"seq", ++seq_}};
  for (auto& [k, v] : message.items()) out[k] = std::move(v);
  return out;
}

void LiveSession::send(const ClientId& client, ojson message) {
  auto it = clients_.find(client);
  if (it == clients_.end() || !it->second.connected) return;
  it->second.sink(stamp(std::move(message)));
}

void LiveSession::broadcast(ojson message) {
  const ojson stamped = stamp(std::move(message));
  for (auto& [id, c] : clients_) {
    if (c.connected) c.sink(stamped);
  }
}

ojson LiveSession::roles_json() const {
  ojson out = ojson::array();
  for (const auto& [client, role] : roles_) out.push_back({{"client", client}, {"role", role_to_json(role)}});
  return out;
}

ojson LiveSession::snapshot_locked(const ClientId& client) const {
  const auto* armed = playback_->armed();
  ojson j{{"type", "snapshot"},
          {"session", id_},
          {"client", client},
          {"story", story_to_json(playback_->story())},
          {"cursor", playback_->cursor()},
          {"world", world_to_json(playback_->world())},
          {"roles", roles_json()},
          {"started", started_},
          {"finished", playback_->finished()},
          {"armed", armed != nullptr ? trigger_to_json(armed->trigger()) : ojson(nullptr)}};
  return j;
}

std::optional<ClientId> LiveSession::holder(const Role& role) const {
  for (const auto& [client, r] : roles_) {
    if (r == role) return client;
  }
  return std::nullopt;
}

void LiveSession::update_started() {
  if (started_) return;
  const Story& story = playback_->story();
  if (story.narrator_mode == NarratorMode::System) {
    started_ = true;
    return;
  }
  if (!holder(Role::narrator())) return;
  for (const auto& name : story.actors) {
    if (!holder(Role::actor_named(name))) return;
  }
  started_ = true;
}

void LiveSession::publish_diagnostics() {
  for (auto& text : playback_->take_diagnostics()) broadcast({{"type", "diagnostic"}, {"text", std::move(text)}});
}

ojson LiveSession::join(const ClientId& client, MessageSink sink) {
  return on_loop([&] {
    auto& c = clients_[client];
    c.sink = std::move(sink);
    c.connected = true;
    if (!roles_.contains(client)) roles_[client] = Role::audience();
    ojson snap = stamp(snapshot_locked(client));
    c.sink(snap);
    return snap;
  });
}

void LiveSession::leave(const ClientId& client) {
  on_loop([&] {
    auto it = clients_.find(client);
    if (it == clients_.end()) return;
    it->second.connected = false;
    it->second.sink = nullptr;
    // Once started, roles stay reserved so the client can rejoin.
    if (!started_) {
      roles_.erase(client);
      broadcast({{"type", "roles"}, {"roles", roles_json()}, {"started", started_}});
    }
  });
}

RoleResult LiveSession::claim_role(const ClientId& client, const Role& role) {
  return on_loop([&] {
    RoleResult result;
    auto current = roles_.find(client);
    if (!clients_.contains(client) || current == roles_.end()) {
      result.reason = "not joined";
    } else if (current->second == role) {
      result.ok = true;
    } else if (started_ && current->second.kind == Role::Kind::Narrator) {
      result.reason = "narrator handoff is disallowed";
    } else if (role.kind == Role::Kind::Actor &&
               std::find(playback_->story().actors.begin(), playback_->story().actors.end(), role.actor) ==
                   playback_->story().actors.end()) {
      result.reason = "unknown actor '" + role.actor + "'";
    } else if (role.kind != Role::Kind::Audience && holder(role)) {
      result.reason = to_string(role) + " is held by another client";
    } else {
      current->second = role;
      result.ok = true;
    }

    ojson reply{{"type", "role_result"}, {"role", role_to_json(role)}, {"ok", result.ok}};
    if (!result.ok) reply["reason"] = result.reason;
    send(client, std::move(reply));
    if (result.ok) {
      update_started();
      broadcast({{"type", "roles"}, {"roles", roles_json()}, {"started", started_}});
    }
    return result;
  });
}

SubmitResult LiveSession::submit_event(const ClientId& client, const InputEvent& event) {
  return on_loop([&] {
    auto reject = [&](std::string reason) {
      send(client, {{"type", "event_result"}, {"accepted", false}, {"reason", reason}});
      return SubmitResult{false, std::move(reason)};
    };
    auto role = roles_.find(client);
    if (!clients_.contains(client) || role == roles_.end()) return reject("not joined");
    if (!started_) {
      reject("not started");
      throw NotStarted("session " + id_ + " has not started");
    }
    if (playback_->finished()) return reject("story finished");
    if (std::holds_alternative<TranscriptEvent>(event) && role->second.kind != Role::Kind::Narrator) {
      return reject("narrator only");
    }

    InputEvent sourced = event;
    std::visit([&](auto& e) { e.source = client; }, sourced);
    send(client, {{"type", "event_result"}, {"accepted", true}});

    if (auto transition = playback_->handle_event(sourced)) {
      const auto& record = playback_->log().back();
      ojson msg{{"type", "transition"},
                {"entered_scene", transition->entered_scene},
                {"event", record.event_kind},
                {"matched", record.matched},
                {"plan", plan_to_json(transition->plan)},
                {"finished", transition->finished}};
      if (transition->narration_to_speak) msg["narration"] = *transition->narration_to_speak;
      broadcast(std::move(msg));
    }
    publish_diagnostics();
    return SubmitResult{true, {}};
  });
}

ojson LiveSession::snapshot(const ClientId& client) {
  return on_loop([&] { return snapshot_locked(client); });
}

bool LiveSession::started() {
  return on_loop([&] { return started_; });
}

bool LiveSession::finished() {
  return on_loop([&] { return playback_->finished(); });
}

int LiveSession::cursor() {
  return on_loop([&] { return playback_->cursor(); });
}

WorldState LiveSession::world() {
  return on_loop([&] { return playback_->world(); });
}

std::map<ClientId, Role> LiveSession::roles() {
  return on_loop([&] { return roles_; });
}

std::string LiveSession::export_log() {
  return on_loop([&] { return playback_->export_log(); });
}

void LiveSession::flush_devices() {
  on_loop([&] { playback_->devices().flush(); });
}

// SessionHub

std::string SessionHub::create(Story story, DeviceRegistry drivers, PlaybackOptions options) {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "s" + std::to_string(next_id_++);
  }
  auto session = std::make_shared<LiveSession>(id, std::move(story), std::move(drivers), std::move(options));
  std::lock_guard lock(mutex_);
  sessions_[id] = std::move(session);
  return id;
}

std::shared_ptr<LiveSession> SessionHub::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw UnknownSession("no session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionHub::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

// ClientMirror

void ClientMirror::apply(const ojson& message) {
  const std::int64_t seq = message.at("seq").get<std::int64_t>();
  if (seq <= last_seq_) {
    throw Error("message seq " + std::to_string(seq) + " after " + std::to_string(last_seq_));
  }
  last_seq_ = seq;
  const std::string type = message.at("type").get<std::string>();
  if (type == "snapshot") {
    has_snapshot_ = true;
    cursor_ = message.at("cursor").get<int>();
    world_ = world_from_json(message.at("world"));
    return;
  }
  if (!has_snapshot_) throw Error("'" + type + "' message before the snapshot");
  if (type == "transition") {
    apply_plan(world_, plan_from_json(message.at("plan")));
    cursor_ = message.at("entered_scene").get<int>();
    transitions_.push_back(cursor_);
  }
}

}  // namespace loomcast
