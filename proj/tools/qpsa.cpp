#include <iostream>
#include <string>
#include <vector>

#include "qpsa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return qpsa::cli::run(args, std::cout, std::cerr);
}
