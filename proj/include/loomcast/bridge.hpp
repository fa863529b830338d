#pragma once

// IR fans behind a local bridge REST API (BOND-Token auth, port 80).

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "loomcast/device.hpp"
#include "loomcast/transport.hpp"

namespace loomcast {

inline constexpr std::uint16_t kBridgePort = 80;
inline constexpr std::string_view kBridgeTokenHeader = "BOND-Token";
inline constexpr std::string_view kBridgeTokenEnv = "LOOMCAST_BRIDGE_TOKEN";

class AuthFailed : public DeviceError {
 public:
  using DeviceError::DeviceError;
};

class UnknownBridgeDevice : public DeviceError {
 public:
  using DeviceError::DeviceError;
};

/// Request for one bridge action. `action` must be TurnOn, TurnOff or
/// SetSpeed (which needs an argument); anything else throws
/// std::invalid_argument.
HttpExchange bridge_action(std::string_view device_id, std::string_view action, std::optional<int> argument,
                           std::string_view token);

HttpExchange bridge_state_request(std::string_view device_id, std::string_view token);

class BridgeFanDriver final : public DeviceDriver {
 public:
  BridgeFanDriver(std::unique_ptr<HttpTransport> transport, std::string device_id, std::string token)
      : transport_(std::move(transport)), device_id_(std::move(device_id)), token_(std::move(token)) {}

  DeviceKind kind() const override { return DeviceKind::Fan; }
  std::string_view family() const override { return "bridge-fan"; }
  DeviceState apply(const CommandPayload& payload) override;

 private:
  void send(const HttpExchange& request);
  FanState observe();

  std::unique_ptr<HttpTransport> transport_;
  std::string device_id_;
  std::string token_;
};

}  // namespace loomcast
