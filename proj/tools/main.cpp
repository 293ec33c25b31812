#include <iostream>
#include <string>
#include <vector>

#include "loanfair/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return loanfair::run_cli(args, std::cout, std::cerr);
}
