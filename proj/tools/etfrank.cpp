#include <iostream>

#include "etfrank/cli.hpp"

int main(int argc, char** argv) { return etfrank::run_cli(argc, argv, std::cout, std::cerr); }
