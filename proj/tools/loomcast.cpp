#include <iostream>

#include <CLI11.hpp>

#include "loomcast/commands.hpp"
#include "loomcast/device.hpp"
#include "loomcast/server.hpp"

namespace {

int serve(const loomcast::ServerOptions& options) {
  try {
    loomcast::Server server(options);
    server.start();
    std::cout << "listening on " << options.host << ":" << server.port() << std::endl;
    server.run_until_signal();
    return loomcast::kExitOk;
  } catch (const loomcast::DriverUnavailable& e) {
    std::cerr << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "serve: " << e.what() << "\n";
  }
  return loomcast::kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trigger-and-scene story engine"};
  app.require_subcommand(1);

  std::string story;
  bool lenient = false;
  auto* validate = app.add_subcommand("validate", "Check a story file");
  validate->add_option("story", story, "Story file or fixture name")->required();
  validate->add_flag("--lenient", lenient, "Report unknown keys as warnings");

  std::optional<int> scene;
  auto* inspect = app.add_subcommand("inspect", "Summarize a story");
  inspect->add_option("story", story, "Story file or fixture name")->required();
  inspect->add_option("--scene", scene, "Also print the effective state at this scene (-1 = initial)");

  loomcast::PlayOptions play_options;
  auto* play = app.add_subcommand("play", "Play a story in the terminal");
  play->add_option("story", play_options.story, "Story file or fixture name")->required();
  auto* simulate = play->add_flag("--simulate", play_options.simulate, "Use simulated devices");
  play->add_option("--devices", play_options.device_map, "Device map file")->excludes(simulate);
  play->add_option("--transcript", play_options.transcript, "Transcript file, or - for standard input");
  play->add_option("--log", play_options.log_path, "Write the transition log to this file");

  loomcast::ServerOptions server_options;
  std::optional<std::string> device_map;
  std::optional<std::string> log_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Serve live sessions and the authoring API");
  serve_cmd->add_option("--host", server_options.host, "Address to bind")->capture_default_str();
  serve_cmd->add_option("--port", server_options.port, "Port to bind")->capture_default_str();
  serve_cmd->add_option("--devices", device_map, "Device map file")->envname("LOOMCAST_DEVICE_MAP");
  serve_cmd->add_option("--log-dir", log_dir, "Write session logs here on shutdown");

  std::vector<std::string> fixtures;
  std::optional<std::string> out_dir;
  auto* fixture = app.add_subcommand("fixture", "Write the built-in fixture stories");
  fixture->add_option("names", fixtures, "goodnight_moon, benjamin_franklin or wind_and_sun (default: all)");
  fixture->add_option("--out", out_dir, "Directory to write .story files into");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? loomcast::kExitOk : loomcast::kExitRuntime;
  }

  if (*validate) return loomcast::cmd_validate(story, lenient, std::cout, std::cerr);
  if (*inspect) return loomcast::cmd_inspect(story, scene, std::cout, std::cerr);
  if (*play) return loomcast::cmd_play(play_options, std::cin, std::cout, std::cerr);
  if (*fixture) return loomcast::cmd_fixture(fixtures, out_dir, std::cout, std::cerr);
  if (*serve_cmd) {
    if (device_map) server_options.device_map = *device_map;
    if (log_dir) server_options.log_dir = *log_dir;
    return serve(server_options);
  }
  return loomcast::kExitInvalid;
}
