#include <iostream>

#include "twoscale_cli/cli.hpp"

int main(int argc, char** argv) { return twoscale::cli::run(argc, argv, std::cout, std::cerr); }
