#include <iostream>

#include "legalqa/cli.hpp"

int main(int argc, char** argv) { return legalqa::run_cli(argc, argv, std::cout, std::cerr, std::cin); }
