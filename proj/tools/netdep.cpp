#include <iostream>
#include <string>
#include <vector>

#include "netdep/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return netdep::run_cli(args, std::cout, std::cerr);
}
