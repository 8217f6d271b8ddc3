#include <iostream>
#include <string>
#include <vector>

#include "arealmix/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return arealmix::run_cli(args, std::cout, std::cerr);
}
