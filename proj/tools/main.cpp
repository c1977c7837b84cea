#include <iostream>

#include "ares/cli.hpp"

int main(int argc, char** argv) { return ares::cli::run(argc, argv, std::cout, std::cerr); }
