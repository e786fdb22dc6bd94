#include <iostream>
#include <string>
#include <vector>

#include "dmr/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return dmr::run_cli(args, std::cout, std::cerr);
}
