#include <iostream>
#include <string>
#include <vector>

#include "concord/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return concord::run_cli(args, std::cout, std::cerr);
}
