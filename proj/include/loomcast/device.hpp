#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "loomcast/errors.hpp"
#include "loomcast/story.hpp"
#include "loomcast/world.hpp"

namespace loomcast {

class DeviceError : public Error {
 public:
  using Error::Error;
};

class Unbound : public DeviceError {
 public:
  using DeviceError::DeviceError;
};

class Timeout : public DeviceError {
 public:
  using DeviceError::DeviceError;
};

class ProtocolError : public DeviceError {
 public:
  using DeviceError::DeviceError;
};

class DriverUnavailable : public DeviceError {
 public:
  using DeviceError::DeviceError;
};

/// Acknowledgement carrying the device state observed after a command.
struct Ack {
  DeviceRef device;
  DeviceState state;

  bool operator==(const Ack&) const = default;
};

class DeviceDriver {
 public:
  virtual ~DeviceDriver() = default;

  virtual DeviceKind kind() const = 0;
  /// Driver family name, e.g. "simulated" or "kasa-bulb".
  virtual std::string_view family() const = 0;
  /// Performs the command and returns the observed state.
  virtual DeviceState apply(const CommandPayload& payload) = 0;
  /// Whether `say` text is spoken.
  virtual bool can_speak() const { return false; }
};

DeviceKind payload_kind(const CommandPayload& payload);

/// Throws std::invalid_argument unless the command sets at least one field.
void check_command(const DeviceCommand& command);

class SimulatedLight final : public DeviceDriver {
 public:
  DeviceKind kind() const override { return DeviceKind::Light; }
  std::string_view family() const override { return "simulated"; }
  DeviceState apply(const CommandPayload& payload) override;
  LightState state() const;

 private:
  mutable std::mutex mutex_;
  LightState state_;
};

class SimulatedFan final : public DeviceDriver {
 public:
  DeviceKind kind() const override { return DeviceKind::Fan; }
  std::string_view family() const override { return "simulated"; }
  DeviceState apply(const CommandPayload& payload) override;
  FanState state() const;

 private:
  mutable std::mutex mutex_;
  FanState state_;
};

/// Records spoken text verbatim instead of producing audio.
class SimulatedSpeaker final : public DeviceDriver {
 public:
  DeviceKind kind() const override { return DeviceKind::Speaker; }
  std::string_view family() const override { return "simulated"; }
  DeviceState apply(const CommandPayload& payload) override;
  bool can_speak() const override { return true; }
  SpeakerState state() const;
  std::vector<std::string> spoken() const;

 private:
  mutable std::mutex mutex_;
  SpeakerState state_;
  std::vector<std::string> spoken_;
};

/// Local speaker that announces what it plays and says on a text stream.
class ConsoleSpeaker final : public DeviceDriver {
 public:
  explicit ConsoleSpeaker(std::ostream& out) : out_(out) {}
  DeviceKind kind() const override { return DeviceKind::Speaker; }
  std::string_view family() const override { return "console"; }
  DeviceState apply(const CommandPayload& payload) override;
  bool can_speak() const override { return true; }

 private:
  std::ostream& out_;
  SpeakerState state_;
};

std::unique_ptr<DeviceDriver> make_simulated(DeviceKind kind);

/// Binds declared devices to drivers.
class DeviceRegistry {
 public:
  DeviceRegistry() = default;
  DeviceRegistry(DeviceRegistry&&) = default;
  DeviceRegistry& operator=(DeviceRegistry&&) = default;

  /// Simulated drivers for every device of `story`.
  static DeviceRegistry simulated_for(const Story& story);

  void bind(DeviceRef id, std::unique_ptr<DeviceDriver> driver);
  DeviceDriver* find(const DeviceRef& id) const;
  std::vector<DeviceRef> bound() const;

  template <typename Driver>
  Driver* find_as(const DeviceRef& id) const {
    return dynamic_cast<Driver*>(find(id));
  }

  bool fallback_to_simulated() const { return fallback_; }
  void set_fallback_to_simulated(bool fallback) { fallback_ = fallback; }

  /// Checks every declared device has a driver of the right kind, binding
  /// simulated drivers for the rest when fallback is enabled. Throws
  /// DriverUnavailable otherwise.
  void ensure_bound(const Story& story);

  /// Throws Unbound when the target has no driver.
  Ack apply(const DeviceCommand& command);

 private:
  std::map<DeviceRef, std::unique_ptr<DeviceDriver>> drivers_;
  bool fallback_ = true;
};

/// Loads a device map file. Bridge tokens default to LOOMCAST_BRIDGE_TOKEN.
DeviceRegistry load_device_map(const std::string& path);

}  // namespace loomcast
