#pragma once

// Independent oracles and fixtures shared by the test binaries. Nothing here
// calls the engine code it is used to check.

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "loomcast/animation.hpp"
#include "loomcast/story.hpp"
#include "loomcast/world.hpp"

namespace loomcast::support {

std::string source_dir();
std::string fixture_path(const std::string& name, const std::string& extension = ".story");
std::string read_file(const std::string& path);

/// Fold recomputed from scratch, one behavior at a time.
WorldState oracle_fold(const Story& story, int scene_index);

/// Applies a plan's device cues and asset end states with the oracle rules.
void oracle_apply_plan(WorldState& world, const AnimationPlan& plan);

/// Lowercase ASCII words with ASCII punctuation removed.
std::vector<std::string> oracle_words(const std::string& text);

/// Joins the chunks with spaces and searches the phrase's words in the
/// resulting word list.
bool oracle_keyword_heard(const std::string& phrase, const std::vector<std::string>& chunks);

bool oracle_touch_hit(const Vec3& center, double half_extent, double threshold, const Vec3& p);

/// c[0] = p[0] ^ 171, c[i] = p[i] ^ c[i-1].
std::vector<std::uint8_t> oracle_autokey(const std::vector<std::uint8_t>& plain);

/// Splits `line` into 1..n chunks at word boundaries.
std::vector<std::string> random_word_split(const std::string& line, std::mt19937_64& rng);

struct RandomStoryOptions {
  int max_devices = 4;
  int max_assets = 4;
  int max_steps = 8;
  int max_behaviors = 4;
};

/// A story that passes validation.
Story random_story(std::mt19937_64& rng, const RandomStoryOptions& options = {});

/// Minimal device speaking the length-prefixed autokey protocol over TCP on
/// 127.0.0.1. Each connection carries one request and one reply.
class FakeKasaDevice {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json& request)>;

  explicit FakeKasaDevice(Handler handler);
  ~FakeKasaDevice();
  FakeKasaDevice(const FakeKasaDevice&) = delete;
  FakeKasaDevice& operator=(const FakeKasaDevice&) = delete;

  std::uint16_t port() const { return port_; }
  std::vector<nlohmann::json> requests() const;
  /// When set, connections are accepted but never answered.
  void set_silent(bool silent) { silent_ = silent; }

 private:
  void serve();

  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<bool> silent_{false};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
  std::thread thread_;
};

/// Bulb state machine answering the lighting service like a real bulb.
FakeKasaDevice::Handler simulated_bulb_handler();

}  // namespace loomcast::support
