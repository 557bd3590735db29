#include <iostream>
#include <string>
#include <vector>

#include "cshift/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cshift::cli_dispatch(args, std::cout, std::cerr);
}
