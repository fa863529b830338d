#include "loomcast/transport.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <httplib.h>

#include "loomcast/device.hpp"

namespace loomcast {
namespace {

using Clock = std::chrono::steady_clock;

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

void wait_for(int fd, short events, Clock::time_point deadline, const std::string& what) {
  pollfd pfd{fd, events, 0};
  const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
  if (rc == 0) throw Timeout(what + ": timed out");
  if (rc < 0) throw DeviceError(what + ": " + std::strerror(errno));
}

void read_exact(int fd, std::uint8_t* out, std::size_t n, Clock::time_point deadline, const std::string& what) {
  std::size_t got = 0;
  while (got < n) {
    wait_for(fd, POLLIN, deadline, what);
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) throw ProtocolError(what + ": connection closed mid-frame");
    if (r < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      throw DeviceError(what + ": " + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
}

}  // namespace

Bytes TcpTransport::exchange(std::span<const std::uint8_t> request) {
  const std::string what = host_ + ":" + std::to_string(port_);
  const auto deadline = Clock::now() + timeout_;

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &found) != 0 || found == nullptr) {
    throw DeviceError(what + ": cannot resolve host");
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> addresses(found, &::freeaddrinfo);

  Socket sock(::socket(found->ai_family, found->ai_socktype, found->ai_protocol));
  if (sock.fd() < 0) throw DeviceError(what + ": " + std::strerror(errno));
  ::fcntl(sock.fd(), F_SETFL, ::fcntl(sock.fd(), F_GETFL) | O_NONBLOCK);

  if (::connect(sock.fd(), found->ai_addr, found->ai_addrlen) != 0) {
    if (errno != EINPROGRESS) throw DeviceError(what + ": connect failed: " + std::strerror(errno));
    wait_for(sock.fd(), POLLOUT, deadline, what);
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw DeviceError(what + ": connect failed: " + std::strerror(err));
  }

  std::size_t sent = 0;
  while (sent < request.size()) {
    wait_for(sock.fd(), POLLOUT, deadline, what);
    const ssize_t w = ::send(sock.fd(), request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      throw DeviceError(what + ": send failed: " + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(w);
  }

  Bytes reply(4);
  read_exact(sock.fd(), reply.data(), 4, deadline, what);
  const std::size_t n = (std::size_t{reply[0]} << 24) | (std::size_t{reply[1]} << 16) |
                        (std::size_t{reply[2]} << 8) | std::size_t{reply[3]};
  if (n > (1u << 24)) throw ProtocolError(what + ": implausible frame length " + std::to_string(n));
  reply.resize(4 + n);
  read_exact(sock.fd(), reply.data() + 4, n, deadline, what);
  return reply;
}

Bytes RecordingByteTransport::exchange(std::span<const std::uint8_t> request) {
  Bytes response = inner_->exchange(request);
  std::lock_guard lock(mutex_);
  recorded_.push_back({Bytes(request.begin(), request.end()), response});
  return response;
}

std::vector<ByteExchange> RecordingByteTransport::recorded() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

Bytes ReplayByteTransport::exchange(std::span<const std::uint8_t> request) {
  if (next_ >= script_.size()) throw ProtocolError("replay: no recorded exchange left");
  const ByteExchange& e = script_[next_];
  if (!std::equal(request.begin(), request.end(), e.request.begin(), e.request.end())) {
    throw ProtocolError("replay: request " + std::to_string(next_) + " differs from the recording");
  }
  ++next_;
  return e.response;
}

HttpReply HttplibTransport::send(const HttpExchange& request) {
  httplib::Client client(host_, port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  httplib::Result res;
  if (request.method == "GET") {
    res = client.Get(request.path, headers);
  } else if (request.method == "PUT") {
    res = client.Put(request.path, headers, request.body, "application/json");
  } else if (request.method == "POST") {
    res = client.Post(request.path, headers, request.body, "application/json");
  } else {
    throw std::invalid_argument("unsupported HTTP method " + request.method);
  }
  if (!res) {
    throw Timeout(host_ + ":" + std::to_string(port_) + ": " + httplib::to_string(res.error()));
  }
  return HttpReply{res->status, res->body};
}

HttpReply RecordingHttpTransport::send(const HttpExchange& request) {
  HttpReply reply = inner_->send(request);
  std::lock_guard lock(mutex_);
  recorded_.push_back({request, reply});
  return reply;
}

std::vector<RecordedHttp> RecordingHttpTransport::recorded() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

HttpReply ReplayHttpTransport::send(const HttpExchange& request) {
  if (next_ >= script_.size()) throw ProtocolError("replay: no recorded exchange left");
  const RecordedHttp& e = script_[next_];
  if (!(e.request == request)) {
    throw ProtocolError("replay: request " + std::to_string(next_) + " (" + request.method + " " + request.path +
                        ") differs from the recording");
  }
  ++next_;
  return e.reply;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw std::invalid_argument("bad hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

nlohmann::json byte_recording_to_json(const std::vector<ByteExchange>& exchanges) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : exchanges) j.push_back({{"request", to_hex(e.request)}, {"response", to_hex(e.response)}});
  return j;
}

std::vector<ByteExchange> byte_recording_from_json(const nlohmann::json& j) {
  std::vector<ByteExchange> out;
  for (const auto& e : j) {
    out.push_back({from_hex(e.at("request").get<std::string>()), from_hex(e.at("response").get<std::string>())});
  }
  return out;
}

nlohmann::json http_recording_to_json(const std::vector<RecordedHttp>& exchanges) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : exchanges) {
    nlohmann::json headers = nlohmann::json::array();
    for (const auto& [k, v] : e.request.headers) headers.push_back({k, v});
    j.push_back({{"method", e.request.method},
                 {"path", e.request.path},
                 {"headers", headers},
                 {"body", e.request.body},
                 {"status", e.reply.status},
                 {"reply", e.reply.body}});
  }
  return j;
}

std::vector<RecordedHttp> http_recording_from_json(const nlohmann::json& j) {
  std::vector<RecordedHttp> out;
  for (const auto& e : j) {
    RecordedHttp r;
    r.request.method = e.at("method").get<std::string>();
    r.request.path = e.at("path").get<std::string>();
    for (const auto& h : e.at("headers")) r.request.headers.emplace_back(h.at(0).get<std::string>(), h.at(1).get<std::string>());
    r.request.body = e.at("body").get<std::string>();
    r.reply.status = e.at("status").get<int>();
    r.reply.body = e.at("reply").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace loomcast
