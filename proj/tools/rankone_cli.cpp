#include <iostream>

#include "rankone/cli.hpp"

int main(int argc, char** argv) {
  return rankone::cli::run(argc, argv, std::cout, std::cerr);
}
