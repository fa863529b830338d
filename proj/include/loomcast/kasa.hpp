#pragma once

// Local smart-plug/bulb protocol: JSON commands, autokey XOR, 4-byte
// big-endian length prefix, TCP port 9999.

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "loomcast/device.hpp"
#include "loomcast/transport.hpp"

namespace loomcast {

inline constexpr std::uint8_t kAutokeyInitial = 171;
inline constexpr std::uint16_t kKasaPort = 9999;

Bytes autokey_encrypt(std::span<const std::uint8_t> plaintext);
Bytes autokey_decrypt(std::span<const std::uint8_t> cipher);

class ShortFrame : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// Length prefix followed by the encrypted payload.
Bytes frame_tcp(std::span<const std::uint8_t> payload);

struct ParsedFrame {
  Bytes payload;  ///< decrypted
  std::span<const std::uint8_t> remainder;
};

/// Parses exactly one frame. Throws ShortFrame on truncated input.
ParsedFrame parse_frame(std::span<const std::uint8_t> data);

Bytes to_bytes(std::string_view s);
std::string to_string(std::span<const std::uint8_t> bytes);

struct KasaOptions {
  /// Pause between the steps of a multi-command effect.
  std::chrono::milliseconds effect_step{120};
};

/// Dimmable color bulb controlled through the lighting service.
class KasaBulbDriver final : public DeviceDriver {
 public:
  explicit KasaBulbDriver(std::unique_ptr<ByteTransport> transport, KasaOptions options = {})
      : transport_(std::move(transport)), options_(options) {}

  DeviceKind kind() const override { return DeviceKind::Light; }
  std::string_view family() const override { return "kasa-bulb"; }
  DeviceState apply(const CommandPayload& payload) override;

  /// Sends one JSON command and returns the decrypted JSON reply.
  nlohmann::json query(const nlohmann::json& command);

 private:
  LightState transition(const nlohmann::json& light_state);
  void run_effect(const std::string& effect, LightState& state);

  std::unique_ptr<ByteTransport> transport_;
  KasaOptions options_;
  std::optional<std::string> effect_;
};

/// Smart plug with a lamp attached: on/off only. Brightness 0 switches it off.
class KasaPlugDriver final : public DeviceDriver {
 public:
  explicit KasaPlugDriver(std::unique_ptr<ByteTransport> transport) : transport_(std::move(transport)) {}

  DeviceKind kind() const override { return DeviceKind::Light; }
  std::string_view family() const override { return "kasa-plug"; }
  DeviceState apply(const CommandPayload& payload) override;

 private:
  std::unique_ptr<ByteTransport> transport_;
  LightState state_;
};

}  // namespace loomcast
