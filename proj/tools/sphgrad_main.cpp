#include <iostream>
#include <string>
#include <vector>

#include "sphgrad/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sphgrad::cli::run(args, std::cout, std::cerr);
}
