#include "loomcast/dispatcher.hpp"

namespace loomcast {

DeviceDispatcher::DeviceDispatcher(DeviceRegistry registry) : registry_(std::move(registry)) {}

DeviceDispatcher::~DeviceDispatcher() {
  flush();
  std::lock_guard lock(mutex_);
  lanes_.clear();
}

SerialExecutor& DeviceDispatcher::lane(const DeviceRef& id) {
  std::lock_guard lock(mutex_);
  auto& slot = lanes_[id];
  if (!slot) slot = std::make_unique<SerialExecutor>();
  return *slot;
}

void DeviceDispatcher::submit(const std::vector<DeviceCommand>& commands) {
  for (const auto& command : commands) {
    lane(command.target).post([this, command] {
      try {
        Ack ack = registry_.apply(command);
        std::lock_guard lock(mutex_);
        acks_.push_back(std::move(ack));
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex_);
        diagnostics_.push_back("device " + command.target + ": " + e.what());
      }
    });
  }
}

void DeviceDispatcher::flush() {
  std::vector<SerialExecutor*> lanes;
  {
    std::lock_guard lock(mutex_);
    for (auto& [id, lane] : lanes_) lanes.push_back(lane.get());
  }
  for (auto* l : lanes) l->drain();
}

std::vector<Ack> DeviceDispatcher::take_acks() {
  std::lock_guard lock(mutex_);
  return std::exchange(acks_, {});
}

std::vector<std::string> DeviceDispatcher::take_diagnostics() {
  std::lock_guard lock(mutex_);
  return std::exchange(diagnostics_, {});
}

}  // namespace loomcast
