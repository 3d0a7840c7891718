#include "falab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return falab::run_cli(argc, argv, std::cout, std::cerr); }
