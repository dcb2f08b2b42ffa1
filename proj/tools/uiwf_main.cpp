#include <iostream>
#include <string>
#include <vector>

#include "uiwf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return uiwf::cli::dispatch(args, std::cout, std::cerr);
}
