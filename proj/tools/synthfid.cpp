#include "synthfid/cli.hpp"

#include <unistd.h>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  synthfid::cli::Streams io{std::cin, std::cout, std::cerr, isatty(STDIN_FILENO) != 0};
  return synthfid::cli::run(args, io, synthfid::cli::seed_from_environment());
}
