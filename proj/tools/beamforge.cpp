#include <iostream>
#include <string>
#include <vector>

#include "beamforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return beamforge::cli::main_entry(args, std::cout, std::cerr);
}
