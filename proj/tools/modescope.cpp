#include <iostream>

#include "modescope/io.hpp"

int main(int argc, char** argv) { return modescope::run_cli(argc, argv, std::cout, std::cerr); }
