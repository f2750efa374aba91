#include <iostream>

#include "glips/cli.hpp"

int main(int argc, char** argv) { return glips::cli::run_cli(argc, argv, std::cout, std::cerr); }
