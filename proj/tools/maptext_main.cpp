#include <iostream>
#include <string>
#include <vector>

#include "maptext/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return maptext::cli::run(args, std::cout, std::cerr);
}
