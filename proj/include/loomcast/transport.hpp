#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace loomcast {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::chrono::milliseconds kDefaultDeviceTimeout{2000};

/// Request/response exchange of raw wire bytes.
class ByteTransport {
 public:
  virtual ~ByteTransport() = default;
  virtual Bytes exchange(std::span<const std::uint8_t> request) = 0;
};

/// One length-prefixed request and response over a fresh TCP connection.
/// Throws Timeout when the host does not answer in time.
class TcpTransport final : public ByteTransport {
 public:
  TcpTransport(std::string host, std::uint16_t port,
               std::chrono::milliseconds timeout = kDefaultDeviceTimeout)
      : host_(std::move(host)), port_(port), timeout_(timeout) {}
  Bytes exchange(std::span<const std::uint8_t> request) override;

 private:
  std::string host_;
  std::uint16_t port_;
  std::chrono::milliseconds timeout_;
};

struct ByteExchange {
  Bytes request;
  Bytes response;
  bool operator==(const ByteExchange&) const = default;
};

class RecordingByteTransport final : public ByteTransport {
 public:
  explicit RecordingByteTransport(std::unique_ptr<ByteTransport> inner) : inner_(std::move(inner)) {}
  Bytes exchange(std::span<const std::uint8_t> request) override;
  std::vector<ByteExchange> recorded() const;

 private:
  std::unique_ptr<ByteTransport> inner_;
  mutable std::mutex mutex_;
  std::vector<ByteExchange> recorded_;
};

/// Serves recorded responses; a request that differs from the recording
/// throws ProtocolError.
class ReplayByteTransport final : public ByteTransport {
 public:
  explicit ReplayByteTransport(std::vector<ByteExchange> script) : script_(std::move(script)) {}
  Bytes exchange(std::span<const std::uint8_t> request) override;
  bool exhausted() const { return next_ == script_.size(); }

 private:
  std::vector<ByteExchange> script_;
  std::size_t next_ = 0;
};

struct HttpExchange {
  std::string method;
  std::string path;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  bool operator==(const HttpExchange&) const = default;
};

struct HttpReply {
  int status = 0;
  std::string body;
  bool operator==(const HttpReply&) const = default;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws Timeout when no reply arrives.
  virtual HttpReply send(const HttpExchange& request) = 0;
};

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(std::string host, std::uint16_t port,
                   std::chrono::milliseconds timeout = kDefaultDeviceTimeout)
      : host_(std::move(host)), port_(port), timeout_(timeout) {}
  HttpReply send(const HttpExchange& request) override;

 private:
  std::string host_;
  std::uint16_t port_;
  std::chrono::milliseconds timeout_;
};

struct RecordedHttp {
  HttpExchange request;
  HttpReply reply;
  bool operator==(const RecordedHttp&) const = default;
};

class RecordingHttpTransport final : public HttpTransport {
 public:
  explicit RecordingHttpTransport(std::unique_ptr<HttpTransport> inner) : inner_(std::move(inner)) {}
  HttpReply send(const HttpExchange& request) override;
  std::vector<RecordedHttp> recorded() const;

 private:
  std::unique_ptr<HttpTransport> inner_;
  mutable std::mutex mutex_;
  std::vector<RecordedHttp> recorded_;
};

class ReplayHttpTransport final : public HttpTransport {
 public:
  explicit ReplayHttpTransport(std::vector<RecordedHttp> script) : script_(std::move(script)) {}
  HttpReply send(const HttpExchange& request) override;
  bool exhausted() const { return next_ == script_.size(); }

 private:
  std::vector<RecordedHttp> script_;
  std::size_t next_ = 0;
};

// Recordings are stored as JSON; byte payloads are hex strings.
nlohmann::json byte_recording_to_json(const std::vector<ByteExchange>& exchanges);
std::vector<ByteExchange> byte_recording_from_json(const nlohmann::json& j);
nlohmann::json http_recording_to_json(const std::vector<RecordedHttp>& exchanges);
std::vector<RecordedHttp> http_recording_from_json(const nlohmann::json& j);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

}  // namespace loomcast
