#include <exception>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fair hierarchical clustering: fairlets, fair trees and sampling experiments"};
  app.require_subcommand(1);
  int code = 0;
  fairhc::cli::add_experiment_commands(app, &code);
  fairhc::cli::add_build(app, &code);
  fairhc::cli::add_synth(app, &code);
  fairhc::cli::add_faircost(*app.add_subcommand("faircost", "fair clustering for the cost objective"), &code);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "fairdendro: " << e.what() << '\n';
    return 1;
  }
  return code;
}
