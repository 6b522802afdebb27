#pragma once

#include "CLI11.hpp"

namespace cli {

// each subcommand stores its exit status in `status` when it runs
void register_torus(CLI::App& app, int& status);
void register_space(CLI::App& app, int& status);

}  // namespace cli
