#include <iostream>

#include "handsoff/cli.hpp"

int main(int argc, char** argv) {
  return handsoff::cli::run(argc, argv, std::cout, std::cerr);
}
