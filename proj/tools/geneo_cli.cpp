#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geneo/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GenEO two-level Schwarz experiment runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a configured study and write its artifacts");
  std::string config_path;
  std::vector<std::string> overrides;
  run->add_option("-c,--config", config_path, "key=value config file")
      ->check(CLI::ExistingFile);
  run->add_option("-s,--set", overrides,
                  "key=value override, applied after the config file (repeatable)");
  run->add_option("settings", overrides, "positional key=value overrides");

  CLI11_PARSE(app, argc, argv);

  geneo::RunConfig config;
  try {
    if (!config_path.empty()) config = geneo::load_config_file(config_path);
    for (const auto& assignment : overrides) geneo::set_config_value(config, assignment);
  } catch (const geneo::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  return geneo::run_study(config, std::cout);
}
