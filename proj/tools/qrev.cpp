#include <iostream>

#include "qrev/cli.hpp"

int main(int argc, char** argv) { return qrev::cli::main(argc, argv, std::cout, std::cerr); }
