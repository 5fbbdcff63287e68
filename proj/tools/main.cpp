#include <iostream>
#include <string>
#include <vector>

#include "bstable/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bstable::cli::run(args, std::cout, std::cerr);
}
