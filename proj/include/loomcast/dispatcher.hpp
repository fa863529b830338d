#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "loomcast/device.hpp"
#include "loomcast/executor.hpp"

namespace loomcast {

/// Delivers commands to drivers without blocking the caller. Commands for one
/// device run in submission order; different devices run in parallel.
/// Failures become diagnostics rather than exceptions.
class DeviceDispatcher {
 public:
  explicit DeviceDispatcher(DeviceRegistry registry);
  ~DeviceDispatcher();

  DeviceRegistry& registry() { return registry_; }
  const DeviceRegistry& registry() const { return registry_; }

  void submit(const std::vector<DeviceCommand>& commands);

  /// Waits until every submitted command has been acknowledged or failed.
  void flush();

  std::vector<Ack> take_acks();
  std::vector<std::string> take_diagnostics();

 private:
  SerialExecutor& lane(const DeviceRef& id);

  DeviceRegistry registry_;
  std::mutex mutex_;
  std::map<DeviceRef, std::unique_ptr<SerialExecutor>> lanes_;
  std::vector<Ack> acks_;
  std::vector<std::string> diagnostics_;
};

}  // namespace loomcast
