#include "support.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "loomcast/kasa.hpp"

namespace loomcast::support {

std::string source_dir() { return LOOMCAST_SOURCE_DIR; }

std::string fixture_path(const std::string& name, const std::string& extension) {
  return source_dir() + "/fixtures/" + name + extension;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Fold oracle. Each device kind is written as a small case table.

namespace {

std::optional<std::string> cleared(const std::string& name) {
  if (name == "none") return std::nullopt;
  return name;
}

void oracle_light(LightState& st, const LightFields& s) {
  if (s.on == true && !s.brightness_pct && st.brightness_pct == 0) {
    st.on = true;
    st.brightness_pct = 100;
  } else {
    if (s.brightness_pct) st.brightness_pct = *s.brightness_pct;
    if (s.on) {
      st.on = *s.on;
    } else if (s.brightness_pct) {
      st.on = *s.brightness_pct != 0;
    }
    if (st.brightness_pct == 0) st.on = false;
  }
  if (s.hue_deg) st.hue_deg = *s.hue_deg;
  if (s.effect) st.effect = cleared(*s.effect);
}

void oracle_fan(FanState& st, const FanFields& s) {
  if (s.on == true && !s.intensity && st.intensity == 0) {
    st.on = true;
    st.intensity = 1;
    return;
  }
  if (s.intensity) st.intensity = *s.intensity;
  if (s.on) {
    st.on = *s.on;
  } else if (s.intensity) {
    st.on = *s.intensity != 0;
  }
  if (st.intensity == 0) st.on = false;
}

void oracle_speaker(SpeakerState& st, const SpeakerFields& s) {
  if (s.volume_pct) st.volume_pct = *s.volume_pct;
  if (s.on) {
    st.on = *s.on;
  } else if (s.sound && *s.sound != "none") {
    st.on = true;
  }
  if (s.sound) st.sound = cleared(*s.sound);
  if (!st.on) st.sound = std::nullopt;
}

void oracle_behavior(WorldState& w, const Story& story, const Behavior& b) {
  if (const auto* x = std::get_if<LightSet>(&b)) {
    if (w.lights.count(x->device)) oracle_light(w.lights[x->device], x->set);
  } else if (const auto* x = std::get_if<FanSet>(&b)) {
    if (w.fans.count(x->device)) oracle_fan(w.fans[x->device], x->set);
  } else if (const auto* x = std::get_if<SpeakerSet>(&b)) {
    if (w.speakers.count(x->device)) oracle_speaker(w.speakers[x->device], x->set);
  } else if (const auto* x = std::get_if<AssetPlace>(&b)) {
    if (!w.assets.count(x->asset)) return;
    Vec3 at = x->position;
    if (x->anchor) {
      bool found = false;
      for (const auto& d : story.devices) {
        if (d.id == *x->anchor) {
          at = {d.position.x + at.x, d.position.y + at.y, d.position.z + at.z};
          found = true;
        }
      }
      if (!found) return;
    }
    AssetState& a = w.assets[x->asset];
    a.present = true;
    a.position = at;
    a.anchor = x->anchor;
  } else if (const auto* x = std::get_if<AssetRemove>(&b)) {
    if (w.assets.count(x->asset)) w.assets[x->asset].present = false;
  } else if (const auto* x = std::get_if<AssetEffect>(&b)) {
    if (w.assets.count(x->asset)) w.assets[x->asset].effect = cleared(x->effect);
  }
}

}  // namespace

WorldState oracle_fold(const Story& story, int scene_index) {
  WorldState w;
  for (const auto& d : story.devices) {
    if (d.kind == DeviceKind::Light) w.lights[d.id] = LightState{true, 100, 60, std::nullopt};
    if (d.kind == DeviceKind::Fan) w.fans[d.id] = FanState{false, 0};
    if (d.kind == DeviceKind::Speaker) w.speakers[d.id] = SpeakerState{true, 50, std::nullopt};
  }
  for (const auto& a : story.assets) w.assets[a.id] = AssetState{false, a.position, std::nullopt, std::nullopt};

  std::vector<const Scene*> scenes{&story.initial};
  for (int i = 0; i <= scene_index; ++i) scenes.push_back(&story.steps.at(static_cast<std::size_t>(i)).scene);
  for (const Scene* scene : scenes) {
    for (const auto& b : scene->behaviors) oracle_behavior(w, story, b);
  }
  return w;
}

void oracle_apply_plan(WorldState& world, const AnimationPlan& plan) {
  for (const auto& effect : plan.effects) {
    if (const auto* cue = std::get_if<DeviceCue>(&effect)) {
      const DeviceCommand& c = cue->command;
      if (const auto* f = std::get_if<LightFields>(&c.payload)) oracle_light(world.lights.at(c.target), *f);
      if (const auto* f = std::get_if<FanFields>(&c.payload)) oracle_fan(world.fans.at(c.target), *f);
      if (const auto* f = std::get_if<SpeakerCommand>(&c.payload)) oracle_speaker(world.speakers.at(c.target), f->set);
    } else if (const auto* e = std::get_if<FadeIn>(&effect)) {
      world.assets.at(e->asset) = e->end;
    } else if (const auto* e = std::get_if<FadeOut>(&effect)) {
      world.assets.at(e->asset) = e->end;
    } else if (const auto* e = std::get_if<Translate>(&effect)) {
      world.assets.at(e->asset) = e->end;
    } else if (const auto* e = std::get_if<AssetCue>(&effect)) {
      world.assets.at(e->asset) = e->end;
    }
  }
}

std::vector<std::string> oracle_words(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      if (!current.empty()) words.push_back(current);
      current.clear();
    } else if (!std::ispunct(u)) {
      current += static_cast<char>(std::tolower(u));
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

bool oracle_keyword_heard(const std::string& phrase, const std::vector<std::string>& chunks) {
  std::string all;
  for (const auto& c : chunks) all += c + " ";
  const auto hay = oracle_words(all);
  const auto needle = oracle_words(phrase);
  if (needle.empty() || needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    std::size_t j = 0;
    while (j < needle.size() && hay[i + j] == needle[j]) ++j;
    if (j == needle.size()) return true;
  }
  return false;
}

bool oracle_touch_hit(const Vec3& center, double half_extent, double threshold, const Vec3& p) {
  const double reach = half_extent + threshold;
  return center.x - reach <= p.x && p.x <= center.x + reach && center.y - reach <= p.y && p.y <= center.y + reach &&
         center.z - reach <= p.z && p.z <= center.z + reach;
}

std::vector<std::uint8_t> oracle_autokey(const std::vector<std::uint8_t>& plain) {
  std::vector<std::uint8_t> cipher;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    const std::uint8_t prev = i == 0 ? std::uint8_t{171} : cipher[i - 1];
    cipher.push_back(static_cast<std::uint8_t>(plain[i] ^ prev));
  }
  return cipher;
}

std::vector<std::string> random_word_split(const std::string& line, std::mt19937_64& rng) {
  std::vector<std::string> words;
  std::istringstream in(line);
  for (std::string w; in >> w;) words.push_back(w);
  std::vector<std::string> chunks;
  std::string current;
  std::bernoulli_distribution cut(0.4);
  for (const auto& w : words) {
    if (!current.empty()) current += ' ';
    current += w;
    if (cut(rng)) {
      chunks.push_back(current);
      current.clear();
    }
  }
  if (!current.empty() || chunks.empty()) chunks.push_back(current);
  return chunks;
}

// Random valid stories.

namespace {

class StoryGen {
 public:
  StoryGen(std::mt19937_64& rng, const RandomStoryOptions& options) : rng_(rng), options_(options) {}

  Story make() {
    Story s;
    s.id = "story-" + std::to_string(pick(0, 99999));
    s.title = text(1, 5);
    s.narrator_mode = chance(0.3) ? NarratorMode::System : NarratorMode::User;
    const int actors = pick(0, 3);
    for (int i = 0; i < actors; ++i) s.actors.push_back("Actor " + std::to_string(i) + " " + word());

    const int devices = pick(0, options_.max_devices);
    for (int i = 0; i < devices; ++i) {
      DeviceKind kind = static_cast<DeviceKind>(pick(0, 2));
      s.devices.push_back({"dev" + std::to_string(i), kind, text(1, 2), position()});
    }
    const int assets = pick(0, options_.max_assets);
    static const char* models[] = {"red balloon", "kite", "cloud", "key", "sun", "wind"};
    for (int i = 0; i < assets; ++i) {
      s.assets.push_back({"asset" + std::to_string(i), models[pick(0, 5)], text(1, 2), position(),
                          pick(1, 100) / 100.0});
    }

    WorldState world = oracle_fold(s, -1);
    s.initial = scene(s, world, false);
    world = oracle_fold(s, -1);

    const int steps = pick(0, options_.max_steps);
    for (int k = 0; k < steps; ++k) {
      Step step{trigger(s, world, k), scene(s, world, s.narrator_mode == NarratorMode::System)};
      s.steps.push_back(std::move(step));
      world = oracle_fold(s, k);
    }
    return s;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  double coordinate() {
    if (chance(0.2)) return std::uniform_real_distribution<double>(-5.0, 5.0)(rng_);
    return pick(-500, 500) / 100.0;
  }
  Vec3 position() { return {coordinate(), coordinate(), coordinate()}; }

  std::string word() {
    static const char* words[] = {"moon", "cozy", "Goodnight", "é", "quote\"d", "tab\there", "kittens", "lamp",
                                  "日本", "back\\slash", "wind", "sun"};
    return words[pick(0, 11)];
  }
  std::string text(int lo, int hi) {
    std::string out;
    const int n = pick(lo, hi);
    for (int i = 0; i < n; ++i) {
      if (i) out += ' ';
      out += word();
    }
    return out;
  }

  Trigger trigger(const Story& s, const WorldState& before, int k) {
    if (s.narrator_mode == NarratorMode::System) return TapTrigger{};
    std::vector<std::string> visible;
    for (const auto& [id, a] : before.assets) {
      if (a.present) visible.push_back(id);
    }
    const int choice = pick(0, visible.empty() ? 1 : 2);
    if (choice == 0) return TapTrigger{};
    if (choice == 1) return KeywordTrigger{"Cue " + std::to_string(k) + (chance(0.5) ? ", moon!" : " rises")};
    TouchTrigger t{visible[static_cast<std::size_t>(pick(0, static_cast<int>(visible.size()) - 1))]};
    if (chance(0.5)) t.threshold_m = pick(1, 30) / 100.0;
    return t;
  }

  Scene scene(const Story& s, const WorldState& /*before*/, bool needs_narration) {
    Scene sc;
    std::vector<std::string> targets;
    for (const auto& d : s.devices) targets.push_back(d.id);
    for (const auto& a : s.assets) targets.push_back(a.id);
    std::shuffle(targets.begin(), targets.end(), rng_);
    const int n = std::min<int>(pick(0, options_.max_behaviors), static_cast<int>(targets.size()));
    for (int i = 0; i < n; ++i) sc.behaviors.push_back(behavior(s, targets[static_cast<std::size_t>(i)]));
    if (needs_narration || chance(0.4)) sc.narration = text(1, 8);
    return sc;
  }

  template <typename T>
  std::optional<T> maybe(T value) {
    return chance(0.5) ? std::optional<T>(value) : std::nullopt;
  }

  Behavior behavior(const Story& s, const std::string& target) {
    if (const DeviceDecl* d = s.find_device(target)) {
      switch (d->kind) {
        case DeviceKind::Light: {
          static const char* effects[] = {"flickering", "pulse", "none"};
          LightFields f;
          while (f.empty()) {
            f.on = maybe(chance(0.5));
            f.brightness_pct = maybe(chance(0.2) ? 0 : pick(0, 100));
            f.hue_deg = maybe(pick(0, 360));
            if (chance(0.3)) f.effect = effects[pick(0, 2)];
            if (f.on == true && f.brightness_pct == 0) f.brightness_pct = 1;
          }
          return LightSet{target, f};
        }
        case DeviceKind::Fan: {
          FanFields f;
          while (f.empty()) {
            f.on = maybe(chance(0.5));
            f.intensity = maybe(pick(0, kMaxFanIntensity));
            if (f.on == true && f.intensity == 0) f.intensity = 2;
          }
          return FanSet{target, f};
        }
        case DeviceKind::Speaker: {
          static const char* sounds[] = {"lullaby", "thunder", "wind", "none"};
          SpeakerFields f;
          while (f.empty()) {
            f.on = maybe(chance(0.5));
            f.volume_pct = maybe(pick(0, 100));
            if (chance(0.5)) f.sound = sounds[pick(0, 3)];
            if (f.on == false && f.sound && *f.sound != "none") f.sound = "none";
          }
          return SpeakerSet{target, f};
        }
      }
    }
    static const char* asset_effects[] = {"glow", "sparkle", "spin", "none"};
    switch (pick(0, 3)) {
      case 0:
        return AssetRemove{target};
      case 1:
        return AssetEffect{target, asset_effects[pick(0, 3)]};
      default: {
        AssetPlace p{target, position(), std::nullopt};
        if (!s.devices.empty() && chance(0.4)) {
          p.anchor = s.devices[static_cast<std::size_t>(pick(0, static_cast<int>(s.devices.size()) - 1))].id;
        }
        return p;
      }
    }
  }

  std::mt19937_64& rng_;
  RandomStoryOptions options_;
};

}  // namespace

Story random_story(std::mt19937_64& rng, const RandomStoryOptions& options) {
  return StoryGen(rng, options).make();
}

// Fake smart-bulb endpoint.

FakeKasaDevice::FakeKasaDevice(Handler handler) : handler_(std::move(handler)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket failed");
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("bind failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { serve(); });
}

FakeKasaDevice::~FakeKasaDevice() {
  stop_ = true;
  thread_.join();
  ::close(listen_fd_);
}

std::vector<nlohmann::json> FakeKasaDevice::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

namespace {

bool read_all(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

void FakeKasaDevice::serve() {
  std::vector<int> parked;
  while (!stop_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    if (silent_) {
      parked.push_back(fd);
      continue;
    }
    Bytes header(4);
    if (read_all(fd, header.data(), 4)) {
      const std::size_t n = (std::size_t{header[0]} << 24) | (std::size_t{header[1]} << 16) |
                            (std::size_t{header[2]} << 8) | header[3];
      Bytes body(n);
      if (read_all(fd, body.data(), n)) {
        const Bytes plain = autokey_decrypt(body);
        const auto request = nlohmann::json::parse(plain.begin(), plain.end(), nullptr, false);
        nlohmann::json reply;
        {
          std::lock_guard lock(mutex_);
          requests_.push_back(request);
        }
        reply = handler_(request);
        const Bytes framed = frame_tcp(to_bytes(reply.dump()));
        ::send(fd, framed.data(), framed.size(), MSG_NOSIGNAL);
      }
    }
    ::close(fd);
  }
  for (int fd : parked) ::close(fd);
}

FakeKasaDevice::Handler simulated_bulb_handler() {
  struct Bulb {
    int on = 1;
    int brightness = 100;
    int hue = 60;
    int relay = 1;
  };
  auto bulb = std::make_shared<Bulb>();
  return [bulb](const nlohmann::json& request) {
    nlohmann::json reply;
    const char* service = "smartlife.iot.smartbulb.lightingservice";
    if (request.contains(service)) {
      const auto& t = request[service]["transition_light_state"];
      if (t.contains("on_off")) bulb->on = t["on_off"].get<int>();
      if (t.contains("brightness")) bulb->brightness = t["brightness"].get<int>();
      if (t.contains("hue")) bulb->hue = t["hue"].get<int>();
      nlohmann::json detail{{"brightness", bulb->brightness}, {"hue", bulb->hue}, {"saturation", 100},
                            {"color_temp", 0}};
      nlohmann::json state{{"on_off", bulb->on}, {"err_code", 0}};
      if (bulb->on) {
        state.update(detail);
      } else {
        state["dft_on_state"] = detail;
      }
      reply[service]["transition_light_state"] = state;
    }
    if (request.contains("system")) {
      const auto& sys = request["system"];
      if (sys.contains("set_relay_state")) {
        bulb->relay = sys["set_relay_state"]["state"].get<int>();
        reply["system"]["set_relay_state"] = {{"err_code", 0}};
      }
      if (sys.contains("get_sysinfo")) reply["system"]["get_sysinfo"] = {{"relay_state", bulb->relay}, {"err_code", 0}};
    }
    return reply;
  };
}

}  // namespace loomcast::support
