#include <iostream>
#include <string>
#include <vector>

#include "softseg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return softseg::cli::run(args, std::cout, std::cerr);
}
