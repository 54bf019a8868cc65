#include <iostream>

#include "stereofake/cli.hpp"

int main(int argc, char** argv) {
  return stereofake::run_cli(argc, argv, std::cout, std::cerr);
}
