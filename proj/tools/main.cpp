#include <iostream>
#include <string>
#include <vector>

#include "hadseg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return hadseg::cli::run(args, std::cout, std::cerr);
}
