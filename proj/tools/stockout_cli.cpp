#include <iostream>

#include "stockout/cli.hpp"

int main(int argc, char** argv) { return stockout::run_cli(argc, argv, std::cout, std::cerr); }
