#include <iostream>
#include <string>
#include <vector>

#include "mlrel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mlrel::cli::run(args, std::cout, std::cerr);
}
