#include <iostream>

#include "blockprune/cli.hpp"

int main(int argc, char** argv) { return blockprune::cli::run(argc, argv, std::cout, std::cerr); }
