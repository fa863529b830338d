#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "loomcast/device.hpp"
#include "loomcast/errors.hpp"
#include "loomcast/format.hpp"
#include "loomcast/playback.hpp"
#include "loomcast/story.hpp"
#include "loomcast/validate.hpp"

namespace loomcast {

struct CatalogEntry {
  AssetRef id;
  std::string model;
  std::string name;
  double half_extent_m = 0.1;
};

/// Asset models an author can place by name.
class AssetCatalog {
 public:
  explicit AssetCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {}
  static const AssetCatalog& builtin();

  /// Matches an id or a display name, ignoring case and punctuation.
  const CatalogEntry* resolve(std::string_view name) const;
  const std::vector<CatalogEntry>& entries() const { return entries_; }

 private:
  std::vector<CatalogEntry> entries_;
};

struct CreateStory {
  NarratorMode narrator_mode = NarratorMode::User;
  std::string title;
  std::vector<DeviceDecl> devices;
  std::vector<std::string> actors;
  std::string id;
};

/// Adds a scene at the end. Without a trigger the story's default applies:
/// tap for system-narrated stories.
struct AppendScene {
  std::optional<Trigger> trigger;
};

struct SetTrigger {
  int step = 0;
  Trigger trigger;
};

/// Replaces the scene's behavior for the same target or appends one.
/// Scene -1 is the initial scene.
struct UpsertBehavior {
  int scene = -1;
  Behavior behavior;
};

struct RemoveBehavior {
  int scene = -1;
  std::string target;
};

struct PlaceAsset {
  int scene = -1;
  std::string asset_name;
  Vec3 position;
  std::optional<DeviceRef> anchor;
};

/// Empty text clears the narration.
struct SetNarration {
  int scene = -1;
  std::string text;
};

struct DeleteScene {
  int step = 0;
};

using EditCommand = std::variant<CreateStory, AppendScene, SetTrigger, UpsertBehavior, RemoveBehavior, PlaceAsset,
                                 SetNarration, DeleteScene>;

class ValidationRejected : public Error {
 public:
  explicit ValidationRejected(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

class UnknownAsset : public Error {
 public:
  using Error::Error;
};

/// Issues an in-progress story may carry while being authored; playback
/// still rejects them.
bool is_incomplete_work(const ValidationIssue& issue);

/// Returns the edited revision; `story` is left untouched. Throws
/// ValidationRejected, UnknownAsset or IndexOutOfRange.
Story apply_edit(const Story& story, const EditCommand& command,
                 const AssetCatalog& catalog = AssetCatalog::builtin());

/// Immutable revision history with undo.
class StoryRevisions {
 public:
  explicit StoryRevisions(Story initial = {}) { revisions_.push_back(std::move(initial)); }

  const Story& current() const { return revisions_.back(); }
  std::size_t size() const { return revisions_.size(); }
  const Story& revision(std::size_t i) const { return revisions_.at(i); }

  /// A rejected edit leaves the history unchanged.
  const Story& apply(const EditCommand& command, const AssetCatalog& catalog = AssetCatalog::builtin());
  const Story& replace(Story story);
  bool undo();

 private:
  std::vector<Story> revisions_;
};

enum class Fixture { GoodnightMoon, BenjaminFranklin, WindAndSun };

std::string_view fixture_name(Fixture fixture);
std::optional<Fixture> fixture_from_name(std::string_view name);
inline constexpr Fixture kAllFixtures[] = {Fixture::GoodnightMoon, Fixture::BenjaminFranklin, Fixture::WindAndSun};

/// Edit sequence that authors a fixture story.
std::vector<EditCommand> fixture_edits(Fixture fixture);

/// Builds a fixture story by applying `fixture_edits`.
Story build_fixture(Fixture fixture);

/// Directory holding the shipped fixture files; LOOMCAST_FIXTURES overrides it.
std::filesystem::path fixture_directory();

/// `arg` itself when it names an existing file, otherwise the shipped
/// fixture file when `arg` is a fixture name.
std::filesystem::path resolve_story_path(const std::string& arg);

/// Starts playback and jumps to `up_to`. Uses simulated drivers unless
/// `drivers` is given.
PlaybackSession preview(const Story& story, int up_to, std::optional<DeviceRegistry> drivers = std::nullopt);

ojson edit_to_json(const EditCommand& command);
/// Throws SchemaError.
EditCommand edit_from_json(const ojson& j);

}  // namespace loomcast
