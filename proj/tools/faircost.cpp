#include <exception>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fair clustering for the cost objective (two colors, equal counts)"};
  int code = 0;
  fairhc::cli::add_faircost(app, &code);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "faircost: " << e.what() << '\n';
    return 1;
  }
  return code;
}
