#include <iostream>

#include "betamix/cli.hpp"

int main(int argc, char** argv) {
  return betamix::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
