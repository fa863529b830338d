#include "loomcast/bridge.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace loomcast {

HttpExchange bridge_action(std::string_view device_id, std::string_view action, std::optional<int> argument,
                           std::string_view token) {
  if (action != "TurnOn" && action != "TurnOff" && action != "SetSpeed") {
    throw std::invalid_argument("unsupported bridge action '" + std::string(action) + "'");
  }
  if (action == "SetSpeed" && !argument) throw std::invalid_argument("SetSpeed needs an argument");

  nlohmann::json body = nlohmann::json::object();
  if (action == "SetSpeed") body["argument"] = *argument;
  return HttpExchange{"PUT",
                      "/v2/devices/" + std::string(device_id) + "/actions/" + std::string(action),
                      {{std::string(kBridgeTokenHeader), std::string(token)}},
                      body.dump()};
}

HttpExchange bridge_state_request(std::string_view device_id, std::string_view token) {
  return HttpExchange{"GET",
                      "/v2/devices/" + std::string(device_id) + "/state",
                      {{std::string(kBridgeTokenHeader), std::string(token)}},
                      ""};
}

void BridgeFanDriver::send(const HttpExchange& request) {
  const HttpReply reply = transport_->send(request);
  if (reply.status == 401) throw AuthFailed("bridge rejected the token for " + request.path);
  if (reply.status == 404) throw UnknownBridgeDevice("bridge does not know device '" + device_id_ + "'");
  if (reply.status != 200) throw ProtocolError("bridge answered " + std::to_string(reply.status) + " to " + request.path);
}

FanState BridgeFanDriver::observe() {
  const HttpExchange request = bridge_state_request(device_id_, token_);
  const HttpReply reply = transport_->send(request);
  if (reply.status == 401) throw AuthFailed("bridge rejected the token for " + request.path);
  if (reply.status == 404) throw UnknownBridgeDevice("bridge does not know device '" + device_id_ + "'");
  if (reply.status != 200) throw ProtocolError("bridge answered " + std::to_string(reply.status) + " to state query");

  const auto doc = nlohmann::json::parse(reply.body, nullptr, false);
  if (!doc.is_object() || !doc.contains("power") || !doc["power"].is_number_integer()) {
    throw ProtocolError("bridge state reply is malformed");
  }
  FanState state;
  state.on = doc["power"].get<int>() != 0;
  state.intensity = doc.value("speed", 0);
  if (state.on && state.intensity == 0) state.intensity = 1;
  return state;
}

DeviceState BridgeFanDriver::apply(const CommandPayload& payload) {
  const auto* set = std::get_if<FanFields>(&payload);
  if (set == nullptr) throw std::invalid_argument("bridge fan: command payload has the wrong device kind");

  if (set->on == false || set->intensity == 0) {
    send(bridge_action(device_id_, "TurnOff", std::nullopt, token_));
  } else if (set->intensity) {
    send(bridge_action(device_id_, "SetSpeed", *set->intensity, token_));
  } else if (set->on == true) {
    send(bridge_action(device_id_, "TurnOn", std::nullopt, token_));
  }
  return observe();
}

}  // namespace loomcast
