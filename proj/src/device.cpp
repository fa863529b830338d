#include "loomcast/device.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "loomcast/bridge.hpp"
#include "loomcast/kasa.hpp"

namespace loomcast {
namespace {

template <typename Fields>
const Fields& expect(const CommandPayload& payload, std::string_view driver) {
  const auto* fields = std::get_if<Fields>(&payload);
  if (fields == nullptr) throw std::invalid_argument(std::string(driver) + ": command payload has the wrong device kind");
  return *fields;
}

}  // namespace

DeviceKind payload_kind(const CommandPayload& payload) {
  static constexpr DeviceKind kinds[] = {DeviceKind::Light, DeviceKind::Fan, DeviceKind::Speaker};
  return kinds[payload.index()];
}

void check_command(const DeviceCommand& command) {
  const bool empty = std::visit([](const auto& p) { return p.empty(); }, command.payload);
  if (empty) throw std::invalid_argument("command for " + command.target + " sets no fields");
}

DeviceState SimulatedLight::apply(const CommandPayload& payload) {
  const auto& set = expect<LightFields>(payload, "simulated light");
  std::lock_guard lock(mutex_);
  apply_fields(state_, set);
  return state_;
}

LightState SimulatedLight::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

DeviceState SimulatedFan::apply(const CommandPayload& payload) {
  const auto& set = expect<FanFields>(payload, "simulated fan");
  std::lock_guard lock(mutex_);
  apply_fields(state_, set);
  return state_;
}

FanState SimulatedFan::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

DeviceState SimulatedSpeaker::apply(const CommandPayload& payload) {
  const auto& cmd = expect<SpeakerCommand>(payload, "simulated speaker");
  std::lock_guard lock(mutex_);
  apply_fields(state_, cmd.set);
  if (cmd.say) spoken_.push_back(*cmd.say);
  return state_;
}

SpeakerState SimulatedSpeaker::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::vector<std::string> SimulatedSpeaker::spoken() const {
  std::lock_guard lock(mutex_);
  return spoken_;
}

DeviceState ConsoleSpeaker::apply(const CommandPayload& payload) {
  const auto& cmd = expect<SpeakerCommand>(payload, "console speaker");
  const auto before = state_;
  apply_fields(state_, cmd.set);
  if (state_.sound != before.sound) {
    out_ << "[speaker] " << (state_.sound ? "playing " + *state_.sound : std::string("silent")) << "\n";
  }
  if (cmd.say) out_ << "[speaker] says: " << *cmd.say << "\n";
  out_.flush();
  return state_;
}

std::unique_ptr<DeviceDriver> make_simulated(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::Light:
      return std::make_unique<SimulatedLight>();
    case DeviceKind::Fan:
      return std::make_unique<SimulatedFan>();
    case DeviceKind::Speaker:
      return std::make_unique<SimulatedSpeaker>();
  }
  return nullptr;
}

DeviceRegistry DeviceRegistry::simulated_for(const Story& story) {
  DeviceRegistry registry;
  for (const auto& d : story.devices) registry.bind(d.id, make_simulated(d.kind));
  return registry;
}

void DeviceRegistry::bind(DeviceRef id, std::unique_ptr<DeviceDriver> driver) {
  drivers_[std::move(id)] = std::move(driver);
}

DeviceDriver* DeviceRegistry::find(const DeviceRef& id) const {
  auto it = drivers_.find(id);
  return it == drivers_.end() ? nullptr : it->second.get();
}

std::vector<DeviceRef> DeviceRegistry::bound() const {
  std::vector<DeviceRef> ids;
  for (const auto& [id, driver] : drivers_) ids.push_back(id);
  return ids;
}

void DeviceRegistry::ensure_bound(const Story& story) {
  for (const auto& d : story.devices) {
    DeviceDriver* driver = find(d.id);
    if (driver != nullptr && driver->kind() != d.kind) {
      throw DriverUnavailable("driver for " + d.id + " is a " + std::string(to_string(driver->kind())) +
                              " driver, story declares a " + std::string(to_string(d.kind)));
    }
    if (driver == nullptr) {
      if (!fallback_) throw DriverUnavailable("no driver bound for device '" + d.id + "'");
      bind(d.id, make_simulated(d.kind));
    }
  }
}

Ack DeviceRegistry::apply(const DeviceCommand& command) {
  DeviceDriver* driver = find(command.target);
  if (driver == nullptr) throw Unbound("device '" + command.target + "' is not bound");
  check_command(command);
  return Ack{command.target, driver->apply(command.payload)};
}

DeviceRegistry load_device_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DriverUnavailable("cannot read device map " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DriverUnavailable("device map " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("devices") || !doc["devices"].is_object()) {
    throw DriverUnavailable("device map " + path + ": expected {\"devices\": {...}}");
  }

  DeviceRegistry registry;
  registry.set_fallback_to_simulated(doc.value("fallback_to_simulated", true));
  const auto timeout = std::chrono::milliseconds(
      static_cast<long>(doc.value("timeout_s", kDefaultDeviceTimeout.count() / 1000.0) * 1000.0));
  const char* env_token = std::getenv(std::string(kBridgeTokenEnv).c_str());

  for (const auto& [id, binding] : doc["devices"].items()) {
    try {
      const std::string driver = binding.at("driver").get<std::string>();
      if (driver == "simulated") {
        const std::string kind = binding.at("kind").get<std::string>();
        if (kind != "light" && kind != "fan" && kind != "speaker") {
          throw DriverUnavailable("device map " + path + ": device '" + id + "': unknown kind '" + kind + "'");
        }
        registry.bind(id, make_simulated(kind == "fan" ? DeviceKind::Fan
                                         : kind == "speaker" ? DeviceKind::Speaker
                                                             : DeviceKind::Light));
      } else if (driver == "kasa-bulb" || driver == "kasa-plug") {
        auto transport = std::make_unique<TcpTransport>(binding.at("host").get<std::string>(),
                                                        binding.value("port", kKasaPort), timeout);
        if (driver == "kasa-bulb") {
          registry.bind(id, std::make_unique<KasaBulbDriver>(std::move(transport)));
        } else {
          registry.bind(id, std::make_unique<KasaPlugDriver>(std::move(transport)));
        }
      } else if (driver == "bridge-fan") {
        std::string token = binding.value("token", env_token != nullptr ? std::string(env_token) : std::string());
        auto transport = std::make_unique<HttplibTransport>(binding.at("host").get<std::string>(),
                                                            binding.value("port", kBridgePort), timeout);
        registry.bind(id, std::make_unique<BridgeFanDriver>(std::move(transport),
                                                            binding.at("bridge_device").get<std::string>(),
                                                            std::move(token)));
      } else if (driver == "console") {
        registry.bind(id, std::make_unique<ConsoleSpeaker>(std::cout));
      } else {
        throw DriverUnavailable("unknown driver '" + driver + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DriverUnavailable("device map " + path + ": device '" + id + "': " + e.what());
    }
  }
  return registry;
}

}  // namespace loomcast
