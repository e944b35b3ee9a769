#include <iostream>
#include <string>
#include <vector>

#include "entangled/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return entangled::cli::run(args, std::cout, std::cerr);
}
