#include <iostream>
#include <string>
#include <vector>

#include "glpge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return glpge::run_cli(args, std::cout, std::cerr);
}
