#include <iostream>

#include "emp/cli.hpp"

int main(int argc, char** argv) { return emp::cli::run(argc, argv, std::cout, std::cerr); }
