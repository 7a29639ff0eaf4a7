#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return matrag::cli::run(argc, argv, std::cout, std::cerr); }
