#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "loomcast/errors.hpp"
#include "loomcast/executor.hpp"
#include "loomcast/format.hpp"
#include "loomcast/playback.hpp"

namespace loomcast {

class UnknownSession : public Error {
 public:
  using Error::Error;
};

class NotStarted : public Error {
 public:
  using Error::Error;
};

struct Role {
  enum class Kind { Narrator, Actor, Audience };

  Kind kind = Kind::Audience;
  /// Actor name; empty for the other kinds.
  std::string actor;

  static Role narrator() { return {Kind::Narrator, {}}; }
  static Role actor_named(std::string name) { return {Kind::Actor, std::move(name)}; }
  static Role audience() { return {Kind::Audience, {}}; }

  bool operator==(const Role&) const = default;
};

/// "narrator", "audience" or "actor:<name>".
std::string to_string(const Role& role);
ojson role_to_json(const Role& role);
/// Throws SchemaError.
Role role_from_json(const ojson& j);

struct RoleResult {
  bool ok = false;
  std::string reason;
};

struct SubmitResult {
  bool accepted = false;
  std::string reason;
};

/// Receives server messages for one client, on the session's event loop.
/// Must not call back into the session.
using MessageSink = std::function<void(const ojson& message)>;

/// A story played by several co-located clients. Every mutation runs on the
/// session's own event loop; the public methods block until it has run.
///
/// Server messages are objects with a "type" and a session-wide "seq".
/// Types: snapshot, role_result, roles, event_result, transition, diagnostic.
class LiveSession {
 public:
  /// Throws InvalidStory or DriverUnavailable.
  LiveSession(std::string id, Story story, DeviceRegistry drivers, PlaybackOptions options = {});
  ~LiveSession();
  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  const std::string& id() const { return id_; }

  /// Registers `client` (as Audience unless it already holds a role) and
  /// sends it a snapshot, which is also returned. Joining again with the
  /// same id replaces the earlier connection.
  ojson join(const ClientId& client, MessageSink sink);
  void leave(const ClientId& client);

  /// Broadcasts the role table when the claim succeeds.
  RoleResult claim_role(const ClientId& client, const Role& role);

  /// Throws NotStarted until the required roles are held.
  SubmitResult submit_event(const ClientId& client, const InputEvent& event);

  ojson snapshot(const ClientId& client = {});
  bool started();
  bool finished();
  int cursor();
  WorldState world();
  std::map<ClientId, Role> roles();
  std::string export_log();

  /// Waits for outstanding device commands.
  void flush_devices();

 private:
  struct Client {
    MessageSink sink;
    bool connected = false;
  };

  template <typename Fn>
  auto on_loop(Fn fn) {
    return loop_.submit(std::move(fn)).get();
  }

  ojson stamp(ojson message);
  void send(const ClientId& client, ojson message);
  void broadcast(ojson message);
  ojson snapshot_locked(const ClientId& client) const;
  ojson roles_json() const;
  void update_started();
  std::optional<ClientId> holder(const Role& role) const;
  void publish_diagnostics();

  std::string id_;
  std::unique_ptr<PlaybackSession> playback_;
  std::map<ClientId, Client> clients_;
  std::map<ClientId, Role> roles_;
  bool started_ = false;
  std::int64_t seq_ = 0;
  SerialExecutor loop_;
};

/// Live sessions by id.
class SessionHub {
 public:
  /// Starts a session and returns its id.
  std::string create(Story story, DeviceRegistry drivers, PlaybackOptions options = {});

  /// Throws UnknownSession.
  std::shared_ptr<LiveSession> find(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Client-side view rebuilt from server messages only.
class ClientMirror {
 public:
  /// Throws Error when a message arrives out of sequence order or before
  /// the snapshot.
  void apply(const ojson& message);

  bool has_snapshot() const { return has_snapshot_; }
  int cursor() const { return cursor_; }
  const WorldState& world() const { return world_; }
  std::int64_t last_seq() const { return last_seq_; }
  const std::vector<int>& transitions() const { return transitions_; }

 private:
  bool has_snapshot_ = false;
  int cursor_ = -1;
  WorldState world_;
  std::int64_t last_seq_ = 0;
  std::vector<int> transitions_;
};

}  // namespace loomcast
