#include <iostream>
#include <vector>

#include "bbcv/io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bbcv::run_cli(args, std::cout, std::cerr);
}
