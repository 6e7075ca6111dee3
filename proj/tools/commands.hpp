#pragma once

#include "CLI11.hpp"

namespace fairhc::cli {

// Each add_* registers a subcommand (or configures the top-level app) and
// returns the exit code through *code once parsed.
void add_faircost(CLI::App& app, int* code);
void add_experiment_commands(CLI::App& app, int* code);
void add_build(CLI::App& app, int* code);
void add_synth(CLI::App& app, int* code);

}  // namespace fairhc::cli
