#include <iostream>
#include <string>
#include <vector>

#include "mmfnd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mmfnd::run_cli(args, std::cout, std::cerr);
}
