#include <iostream>

#include "raycomp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return raycomp::run_cli(args, std::cout, std::cerr);
}
