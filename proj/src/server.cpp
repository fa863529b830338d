#include "loomcast/server.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <fstream>
#include <iostream>
#include <list>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "loomcast/authoring.hpp"
#include "loomcast/wire.hpp"

namespace loomcast {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response make_response(const Request& req, http::status status, std::string body,
                       std::string_view content_type = "application/json") {
  Response res{status, req.version()};
  res.set(http::field::server, "loomcast");
  res.set(http::field::content_type, beast::string_view(content_type.data(), content_type.size()));
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response json_response(const Request& req, http::status status, const ojson& body) {
  return make_response(req, status, body.dump(2) + "\n");
}

Response error_response(const Request& req, http::status status, const std::string& message) {
  return json_response(req, status, {{"error", message}});
}

std::vector<std::string> path_segments(std::string_view target) {
  target = target.substr(0, target.find('?'));
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < target.size()) {
    if (target[i] == '/') {
      ++i;
      continue;
    }
    std::size_t end = target.find('/', i);
    if (end == std::string_view::npos) end = target.size();
    out.emplace_back(target.substr(i, end - i));
    i = end;
  }
  return out;
}

}  // namespace

// Shared state

struct Server::Impl {
  explicit Impl(ServerOptions opts) : options(std::move(opts)), ioc(std::max(1, options.threads)), acceptor(ioc) {}

  DeviceRegistry drivers_for(const Story& story) const {
    if (options.device_map) return load_device_map(options.device_map->string());
    return DeviceRegistry::simulated_for(story);
  }

  Response handle(const Request& req);
  Response create_session(const Request& req);
  Response story_request(const Request& req, const std::string& id, const std::string& action);

  void track(std::weak_ptr<void> connection, std::function<void()> closer) {
    std::lock_guard lock(connections_mutex);
    std::erase_if(connections, [](const auto& c) { return c.first.expired(); });
    connections.emplace_back(std::move(connection), std::move(closer));
  }

  std::size_t live_connections() {
    std::lock_guard lock(connections_mutex);
    std::erase_if(connections, [](const auto& c) { return c.first.expired(); });
    return connections.size();
  }

  void write_logs();

  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> threads;
  SessionHub hub;

  std::mutex stories_mutex;
  std::map<std::string, StoryRevisions> stories;

  std::mutex connections_mutex;
  std::list<std::pair<std::weak_ptr<void>, std::function<void()>>> connections;

  std::mutex stop_mutex;
  bool stopped = false;
  bool started = false;
};

// WebSocket connection

namespace {

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<LiveSession> session)
      : ws_(std::move(socket)), session_(std::move(session)) {}

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

  /// Safe from any thread.
  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->closing_) return;
      self->closing_ = true;
      self->ws_.async_close(websocket::close_code::going_away, [self](beast::error_code) {});
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      detach();
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle(text);
    read();
  }

  void detach() {
    if (client_) {
      session_->leave(*client_);
      client_.reset();
    }
  }

  void reply_error(const std::string& message) { enqueue(ojson{{"type", "error"}, {"message", message}}.dump()); }

  void handle(const std::string& text) {
    ojson msg;
    try {
      msg = ojson::parse(text);
    } catch (const ojson::parse_error& e) {
      reply_error(std::string("malformed message: ") + e.what());
      return;
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      reply_error("message needs a string \"type\"");
      return;
    }
    const std::string type = msg["type"].get<std::string>();
    try {
      if (type == "join") {
        join(msg);
      } else if (!client_) {
        reply_error("send a join message first");
      } else if (type == "claim_role") {
        if (!msg.contains("role")) throw SchemaError("role", "missing required field");
        session_->claim_role(*client_, role_from_json(msg["role"]));
      } else if (type == "event") {
        if (!msg.contains("event")) throw SchemaError("event", "missing required field");
        session_->submit_event(*client_, event_from_json(msg["event"], *client_));
      } else {
        reply_error("unknown message type '" + type + "'");
      }
    } catch (const NotStarted&) {
      // The session already told the client.
    } catch (const SchemaError& e) {
      reply_error(e.what());
    }
  }

  void join(const ojson& msg) {
    if (msg.contains("session") && msg["session"] != session_->id()) {
      reply_error("this connection belongs to session " + session_->id());
      return;
    }
    if (client_) {
      reply_error("already joined as " + *client_);
      return;
    }
    ClientId id;
    if (msg.contains("client") && msg["client"].is_string() && !msg["client"].get<std::string>().empty()) {
      id = msg["client"].get<std::string>();
    } else {
      static std::atomic<std::uint64_t> next{1};
      id = "client-" + std::to_string(next++);
    }
    client_ = id;
    std::weak_ptr<WsConnection> weak = shared_from_this();
    session_->join(id, [weak](const ojson& message) {
      if (auto self = weak.lock()) self->enqueue(message.dump());
    });
  }

  void enqueue(std::string text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->outbox_.push_back(std::move(text));
      if (self->outbox_.size() == 1) self->write();
    });
  }

  void write() {
    if (closing_) {
      outbox_.clear();
      return;
    }
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->outbox_.clear();
        return;
      }
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::shared_ptr<LiveSession> session_;
  std::optional<ClientId> client_;
  std::deque<std::string> outbox_;
  bool closing_ = false;
};

// Plain HTTP connection; hands WebSocket upgrades over to WsConnection.
class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
  }

  void close() {
    net::post(stream_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      self->stream_.socket().shutdown(tcp::socket::shutdown_both, ec);
      self->stream_.close();
    });
  }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (websocket::is_upgrade(req_)) {
      upgrade();
      return;
    }
    Response res = server_.handle(req_);
    auto shared = std::make_shared<Response>(std::move(res));
    http::async_write(stream_, *shared, [self = shared_from_this(), shared](beast::error_code ec, std::size_t) {
      if (ec || !shared->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  void upgrade() {
    auto segments = path_segments(std::string(req_.target()));
    std::shared_ptr<LiveSession> session;
    if (segments.size() == 2 && segments[0] == "session") {
      try {
        session = server_.hub.find(segments[1]);
      } catch (const UnknownSession&) {
      }
    }
    if (!session) {
      auto res = std::make_shared<Response>(error_response(req_, http::status::not_found, "unknown session"));
      res->keep_alive(false);
      http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      });
      return;
    }
    stream_.expires_never();
    auto ws = std::make_shared<WsConnection>(stream_.release_socket(), std::move(session));
    server_.track(ws, [weak = std::weak_ptr<WsConnection>(ws)] {
      if (auto c = weak.lock()) c->close();
    });
    ws->run(std::move(req_));
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  Request req_;
  Server::Impl& server_;
};

void accept_loop(Server::Impl& server) {
  server.acceptor.async_accept(net::make_strand(server.ioc), [&server](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted || !server.acceptor.is_open()) return;
    } else {
      auto connection = std::make_shared<HttpConnection>(std::move(socket), server);
      server.track(connection, [weak = std::weak_ptr<HttpConnection>(connection)] {
        if (auto c = weak.lock()) c->close();
      });
      connection->run();
    }
    accept_loop(server);
  });
}

}  // namespace

// Routes

Response Server::Impl::handle(const Request& req) {
  const auto segments = path_segments(std::string(req.target()));
  try {
    if (segments.size() == 1 && segments[0] == "sessions") {
      if (req.method() == http::verb::post) return create_session(req);
      if (req.method() == http::verb::get) return json_response(req, http::status::ok, {{"sessions", hub.ids()}});
      return error_response(req, http::status::method_not_allowed, "use GET or POST");
    }
    if (segments.size() == 3 && segments[0] == "sessions" && segments[2] == "log") {
      if (req.method() != http::verb::get) return error_response(req, http::status::method_not_allowed, "use GET");
      auto session = hub.find(segments[1]);
      return make_response(req, http::status::ok, session->export_log(), "application/x-ndjson");
    }
    if (segments.size() == 2 && segments[0] == "stories") return story_request(req, segments[1], "");
    if (segments.size() == 3 && segments[0] == "stories") return story_request(req, segments[1], segments[2]);
    return error_response(req, http::status::not_found, "no route for " + std::string(req.target()));
  } catch (const UnknownSession& e) {
    return error_response(req, http::status::not_found, e.what());
  } catch (const std::exception& e) {
    return error_response(req, http::status::internal_server_error, e.what());
  }
}

namespace {

ojson parse_body(const Request& req) {
  try {
    return ojson::parse(req.body());
  } catch (const ojson::parse_error& e) {
    auto [line, column] = line_column(req.body(), e.byte == 0 ? 0 : e.byte - 1);
    throw SyntaxError(e.what(), line, column);
  }
}

Response syntax_error(const Request& req, const SyntaxError& e) {
  return json_response(req, http::status::bad_request,
                       {{"error", e.what()}, {"line", e.line()}, {"column", e.column()}});
}

Response schema_error(const Request& req, const SchemaError& e) {
  return json_response(req, http::status::bad_request, {{"error", e.what()}, {"path", e.path()}});
}

Response rejected(const Request& req, const std::string& message, const std::vector<ValidationIssue>& issues) {
  return json_response(req, http::status::unprocessable_entity, {{"error", message}, {"issues", issues_to_json(issues)}});
}

}  // namespace

Response Server::Impl::create_session(const Request& req) {
  try {
    const ojson body = parse_body(req);
    if (!body.is_object()) throw SchemaError("$", "expected an object");

    Story story;
    if (body.contains("story_file") || body.contains("fixture")) {
      const char* key = body.contains("story_file") ? "story_file" : "fixture";
      if (!body[key].is_string()) throw SchemaError(key, "expected a string");
      const auto path = resolve_story_path(body[key].get<std::string>());
      if (!std::filesystem::is_regular_file(path)) {
        return error_response(req, http::status::not_found, "no story file " + path.string());
      }
      story = load_story_file(path).story;
    } else if (body.contains("story_id")) {
      if (!body["story_id"].is_string()) throw SchemaError("story_id", "expected a string");
      std::lock_guard lock(stories_mutex);
      auto it = stories.find(body["story_id"].get<std::string>());
      if (it == stories.end()) return error_response(req, http::status::not_found, "no such story");
      story = it->second.current();
    } else if (body.contains("story")) {
      story = parse_story(body["story"].dump()).story;
    } else {
      throw SchemaError("story_file", "missing required field");
    }

    const std::string id = hub.create(story, drivers_for(story));
    return json_response(req, http::status::created, {{"id", id}, {"websocket", "/session/" + id}});
  } catch (const SyntaxError& e) {
    return syntax_error(req, e);
  } catch (const SchemaError& e) {
    return schema_error(req, e);
  } catch (const SemanticError& e) {
    return rejected(req, "story has validation errors", e.issues());
  } catch (const InvalidStory& e) {
    return error_response(req, http::status::unprocessable_entity, e.what());
  } catch (const DriverUnavailable& e) {
    return error_response(req, http::status::service_unavailable, e.what());
  } catch (const Error& e) {
    return error_response(req, http::status::not_found, e.what());
  }
}

Response Server::Impl::story_request(const Request& req, const std::string& id, const std::string& action) {
  try {
    if (action.empty() && req.method() == http::verb::get) {
      std::lock_guard lock(stories_mutex);
      auto it = stories.find(id);
      if (it == stories.end()) return error_response(req, http::status::not_found, "no story '" + id + "'");
      return make_response(req, http::status::ok, story_to_json(it->second.current()).dump(2) + "\n",
                           kStoryMimeType);
    }

    if (action.empty() && req.method() == http::verb::put) {
      std::vector<ValidationIssue> issues;
      Story story = story_from_json(parse_body(req), ParseOptions{false}, issues);
      story.id = id;
      std::vector<ValidationIssue> blocking;
      for (auto& issue : validate_story(story)) {
        if (issue.severity == Severity::Error && !is_incomplete_work(issue)) {
          blocking.push_back(std::move(issue));
        } else {
          issues.push_back(std::move(issue));
        }
      }
      if (!blocking.empty()) return rejected(req, "story has validation errors", blocking);
      std::lock_guard lock(stories_mutex);
      auto [it, inserted] = stories.try_emplace(id, story);
      if (!inserted) it->second.replace(std::move(story));
      return json_response(req, inserted ? http::status::created : http::status::ok,
                           {{"id", id}, {"revision", it->second.size() - 1}, {"issues", issues_to_json(issues)}});
    }

    if (action == "edits" && req.method() == http::verb::post) {
      EditCommand edit = edit_from_json(parse_body(req));
      std::lock_guard lock(stories_mutex);
      auto it = stories.find(id);
      if (it == stories.end()) {
        if (!std::holds_alternative<CreateStory>(edit)) {
          return error_response(req, http::status::not_found, "no story '" + id + "'");
        }
        it = stories.try_emplace(id).first;
      }
      if (auto* create = std::get_if<CreateStory>(&edit); create != nullptr && create->id.empty()) create->id = id;
      try {
        const Story& story = it->second.apply(edit);
        return json_response(req, http::status::ok,
                             {{"id", id}, {"revision", it->second.size() - 1}, {"story", story_to_json(story)}});
      } catch (const ValidationRejected& e) {
        return rejected(req, "edit rejected", e.issues());
      } catch (const UnknownAsset& e) {
        return error_response(req, http::status::unprocessable_entity, e.what());
      } catch (const IndexOutOfRange& e) {
        return error_response(req, http::status::unprocessable_entity, e.what());
      }
    }

    if (action == "preview" && req.method() == http::verb::post) {
      const ojson body = req.body().empty() ? ojson::object() : parse_body(req);
      int up_to = -1;
      if (body.contains("up_to")) {
        if (!body["up_to"].is_number_integer()) throw SchemaError("up_to", "expected an integer");
        up_to = body["up_to"].get<int>();
      }
      Story story;
      {
        std::lock_guard lock(stories_mutex);
        auto it = stories.find(id);
        if (it == stories.end()) return error_response(req, http::status::not_found, "no story '" + id + "'");
        story = it->second.current();
      }
      const bool real_devices = body.value("devices", false);
      try {
        PlaybackSession session = preview(story, up_to, real_devices ? std::optional(drivers_for(story)) : std::nullopt);
        session.devices().flush();
        ojson devices = ojson::object();
        for (const auto& ack : session.devices().take_acks()) devices[ack.device] = device_state_to_json(ack.state);
        ojson diagnostics = ojson::array();
        for (auto& d : session.take_diagnostics()) diagnostics.push_back(std::move(d));
        return json_response(req, http::status::ok,
                             {{"cursor", session.cursor()},
                              {"world", world_to_json(session.world())},
                              {"devices", devices},
                              {"diagnostics", diagnostics}});
      } catch (const InvalidStory& e) {
        return error_response(req, http::status::unprocessable_entity, e.what());
      } catch (const IndexOutOfRange& e) {
        return error_response(req, http::status::unprocessable_entity, e.what());
      }
    }
    return error_response(req, http::status::method_not_allowed, "unsupported method for " + std::string(req.target()));
  } catch (const SyntaxError& e) {
    return syntax_error(req, e);
  } catch (const SchemaError& e) {
    return schema_error(req, e);
  } catch (const DriverUnavailable& e) {
    return error_response(req, http::status::service_unavailable, e.what());
  }
}

void Server::Impl::write_logs() {
  if (!options.log_dir) return;
  std::error_code ec;
  std::filesystem::create_directories(*options.log_dir, ec);
  for (const auto& id : hub.ids()) {
    auto session = hub.find(id);
    session->flush_devices();
    std::ofstream out(*options.log_dir / (id + ".ndjson"), std::ios::binary);
    out << session->export_log();
    if (!out) std::cerr << "cannot write log for session " << id << "\n";
  }
}

// Server

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  if (impl_->options.device_map) load_device_map(impl_->options.device_map->string());
}

Server::~Server() { stop(); }

void Server::start() {
  auto& s = *impl_;
  tcp::endpoint endpoint(net::ip::make_address(s.options.host), s.options.port);
  s.acceptor.open(endpoint.protocol());
  s.acceptor.set_option(net::socket_base::reuse_address(true));
  s.acceptor.bind(endpoint);
  s.acceptor.listen(net::socket_base::max_listen_connections);
  accept_loop(s);
  for (int i = 0; i < std::max(1, s.options.threads); ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
  s.started = true;
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

SessionHub& Server::sessions() { return impl_->hub; }

void Server::stop() {
  auto& s = *impl_;
  {
    std::lock_guard lock(s.stop_mutex);
    if (s.stopped) return;
    s.stopped = true;
  }
  if (s.started) {
    net::post(s.acceptor.get_executor(), [&s] {
      beast::error_code ec;
      s.acceptor.close(ec);
    });
    std::vector<std::function<void()>> closers;
    {
      std::lock_guard lock(s.connections_mutex);
      for (auto& [weak, closer] : s.connections) closers.push_back(closer);
    }
    for (auto& close : closers) close();
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (s.live_connections() > 0 && std::chrono::steady_clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    s.ioc.stop();
    for (auto& t : s.threads) t.join();
    s.threads.clear();
  }
  s.write_logs();
}

void Server::run_until_signal() {
  net::io_context signals_ioc;
  net::signal_set signals(signals_ioc, SIGINT, SIGTERM);
  signals.async_wait([](beast::error_code, int) {});
  signals_ioc.run();
  stop();
}

}  // namespace loomcast
