#include <iostream>
#include <string>
#include <vector>

#include "recoilfree/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return recoilfree::cli::run(args, std::cout, std::cerr);
}
