#pragma once

// Subcommands of the loomcast tool, callable without a process.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace loomcast {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,
  kExitRuntime = 2,
  /// Playback ended before the last scene.
  kExitIncomplete = 3,
};

int cmd_validate(const std::string& story, bool lenient, std::ostream& out, std::ostream& err);

/// Summary of the story; with `scene`, also the effective world there.
int cmd_inspect(const std::string& story, std::optional<int> scene, std::ostream& out, std::ostream& err);

struct PlayOptions {
  /// Story file or fixture name.
  std::string story;
  bool simulate = false;
  std::optional<std::string> device_map;
  /// Transcript file, "-" for standard input. Without one, playback is
  /// interactive on `in`.
  std::optional<std::string> transcript;
  /// Writes the transition log here.
  std::optional<std::string> log_path;
};

int cmd_play(const PlayOptions& options, std::istream& in, std::ostream& out, std::ostream& err);

/// Writes canonical fixture documents to `out_dir`, or to `out` without one.
int cmd_fixture(const std::vector<std::string>& names, const std::optional<std::string>& out_dir, std::ostream& out,
                std::ostream& err);

}  // namespace loomcast
