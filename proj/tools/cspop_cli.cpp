#include <iostream>
#include <string>
#include <vector>

#include "cspop/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cspop::cli::run(args, std::cout, std::cerr);
}
