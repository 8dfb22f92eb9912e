#include <iostream>
#include <string>
#include <vector>

#include "s2f/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return s2f::run_cli(args, std::cout, std::cerr);
}
