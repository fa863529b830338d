#include "loomcast/kasa.hpp"

#include <thread>

namespace loomcast {

using nlohmann::json;

Bytes autokey_encrypt(std::span<const std::uint8_t> plaintext) {
  Bytes out(plaintext.size());
  std::uint8_t key = kAutokeyInitial;
  for (std::size_t i = 0; i < plaintext.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(plaintext[i] ^ key);
    key = out[i];
  }
  return out;
}

Bytes autokey_decrypt(std::span<const std::uint8_t> cipher) {
  Bytes out(cipher.size());
  std::uint8_t key = kAutokeyInitial;
  for (std::size_t i = 0; i < cipher.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(cipher[i] ^ key);
    key = cipher[i];
  }
  return out;
}

Bytes frame_tcp(std::span<const std::uint8_t> payload) {
  if (payload.size() > 0xFFFFFFFFull) throw std::length_error("payload too large for a frame");
  const auto n = static_cast<std::uint32_t>(payload.size());
  Bytes out{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16), static_cast<std::uint8_t>(n >> 8),
            static_cast<std::uint8_t>(n)};
  Bytes body = autokey_encrypt(payload);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

ParsedFrame parse_frame(std::span<const std::uint8_t> data) {
  if (data.size() < 4) throw ShortFrame("frame shorter than its length prefix");
  const std::size_t n = (std::size_t{data[0]} << 24) | (std::size_t{data[1]} << 16) | (std::size_t{data[2]} << 8) |
                        std::size_t{data[3]};
  if (data.size() - 4 < n) {
    throw ShortFrame("frame announces " + std::to_string(n) + " bytes, " + std::to_string(data.size() - 4) +
                     " available");
  }
  return {autokey_decrypt(data.subspan(4, n)), data.subspan(4 + n)};
}

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
std::string to_string(std::span<const std::uint8_t> bytes) { return std::string(bytes.begin(), bytes.end()); }

namespace {

json exchange_json(ByteTransport& transport, const json& command) {
  const Bytes reply = transport.exchange(frame_tcp(to_bytes(command.dump())));
  const ParsedFrame frame = parse_frame(reply);
  json doc = json::parse(frame.payload.begin(), frame.payload.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ProtocolError("device reply is not a JSON object");
  return doc;
}

void check_err_code(const json& node, std::string_view what) {
  if (!node.is_object()) throw ProtocolError(std::string(what) + ": malformed reply");
  const auto it = node.find("err_code");
  if (it == node.end() || !it->is_number_integer()) throw ProtocolError(std::string(what) + ": reply has no err_code");
  if (it->get<int>() != 0) {
    throw ProtocolError(std::string(what) + ": device error " + std::to_string(it->get<int>()) +
                        (node.contains("err_msg") ? " (" + node["err_msg"].dump() + ")" : ""));
  }
}

int int_field(const json& node, const char* key, std::string_view what) {
  const auto it = node.find(key);
  if (it == node.end() || !it->is_number_integer()) {
    throw ProtocolError(std::string(what) + ": reply lacks integer '" + key + "'");
  }
  return it->get<int>();
}

constexpr const char* kLightingService = "smartlife.iot.smartbulb.lightingservice";

}  // namespace

json KasaBulbDriver::query(const json& command) { return exchange_json(*transport_, command); }

LightState KasaBulbDriver::transition(const json& light_state) {
  json cmd;
  cmd[kLightingService]["transition_light_state"] = light_state;
  const json reply = query(cmd);
  const auto service = reply.find(kLightingService);
  if (service == reply.end() || !service->contains("transition_light_state")) {
    throw ProtocolError("bulb reply lacks transition_light_state");
  }
  const json& state = (*service)["transition_light_state"];
  check_err_code(state, "bulb");

  LightState observed;
  observed.on = int_field(state, "on_off", "bulb") != 0;
  const json& detail = observed.on ? state : state.value("dft_on_state", json::object());
  observed.brightness_pct = int_field(detail, "brightness", "bulb");
  observed.hue_deg = int_field(detail, "hue", "bulb");
  observed.effect = effect_;
  return observed;
}

void KasaBulbDriver::run_effect(const std::string& effect, LightState& state) {
  if (!state.on) return;
  const int base = state.brightness_pct;
  if (effect == "flickering") {
    for (int i = 0; i < 3; ++i) {
      transition({{"on_off", 1}, {"brightness", std::max(1, base / 5)}, {"transition_period", 0}});
      std::this_thread::sleep_for(options_.effect_step);
      transition({{"on_off", 1}, {"brightness", base}, {"transition_period", 0}});
      std::this_thread::sleep_for(options_.effect_step);
    }
  } else if (effect == "pulse") {
    transition({{"on_off", 1}, {"brightness", std::max(1, base / 3)}, {"transition_period", 400}});
    std::this_thread::sleep_for(options_.effect_step);
    transition({{"on_off", 1}, {"brightness", base}, {"transition_period", 400}});
  }
  state = transition({{"ignore_default", 1}});
}

DeviceState KasaBulbDriver::apply(const CommandPayload& payload) {
  const auto* set = std::get_if<LightFields>(&payload);
  if (set == nullptr) throw std::invalid_argument("kasa bulb: command payload has the wrong device kind");

  json light{{"ignore_default", 1}, {"transition_period", 0}};
  const bool off = set->on == false || set->brightness_pct == 0;
  if (off) {
    light["on_off"] = 0;
  } else if (set->on || set->brightness_pct) {
    light["on_off"] = 1;
  }
  if (set->brightness_pct && *set->brightness_pct > 0) light["brightness"] = *set->brightness_pct;
  if (set->hue_deg) {
    light["hue"] = *set->hue_deg % 360;
    light["saturation"] = 100;
    light["color_temp"] = 0;
  }
  if (set->effect) {
    effect_ = *set->effect == "none" ? std::nullopt : std::optional<std::string>(*set->effect);
  }

  LightState state = transition(light);
  if (set->brightness_pct == 0) state.brightness_pct = 0;
  if (set->effect && effect_) run_effect(*effect_, state);
  if (set->brightness_pct == 0) state.brightness_pct = 0;
  return state;
}

DeviceState KasaPlugDriver::apply(const CommandPayload& payload) {
  const auto* set = std::get_if<LightFields>(&payload);
  if (set == nullptr) throw std::invalid_argument("kasa plug: command payload has the wrong device kind");

  LightState wanted = state_;
  apply_fields(wanted, *set);
  json cmd;
  cmd["system"]["set_relay_state"]["state"] = wanted.on ? 1 : 0;
  cmd["system"]["get_sysinfo"] = nullptr;
  const json reply = exchange_json(*transport_, cmd);
  const auto system = reply.find("system");
  if (system == reply.end() || !system->is_object()) throw ProtocolError("plug reply lacks system");
  check_err_code(system->value("set_relay_state", json()), "plug");
  const json info = system->value("get_sysinfo", json());
  check_err_code(info, "plug");

  state_ = wanted;
  state_.on = int_field(info, "relay_state", "plug") != 0;
  return state_;
}

}  // namespace loomcast
