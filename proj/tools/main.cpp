#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return marsadmm::tools::cli_main(argc, argv, std::cout, std::cerr);
}
