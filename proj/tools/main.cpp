#include <iostream>

#include "cli/run.hpp"

int main(int argc, char** argv) { return covtest::cli::run_main(argc, argv, std::cout, std::cerr); }
