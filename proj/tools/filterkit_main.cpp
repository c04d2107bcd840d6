#include <iostream>
#include <string>
#include <vector>

#include "filterkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return filterkit::cli::run(args, std::cout, std::cerr);
}
