#include <iostream>

#include "saod/cli.hpp"

int main(int argc, char** argv) { return saod::cli::run(argc, argv, std::cout, std::cerr); }
