#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"alphadyn: alpha-effect dynamo toolkit"};
  app.set_version_flag("--version", std::string("alphadyn ") + ALPHADYN_VERSION);
  // TOML-style file; section [alpha.matrix] holds options of that subcommand
  app.set_config("--config", "", "configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  int status = 0;
  cli::register_torus(app, status);
  cli::register_space(app, status);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return status;
}
