#include "ilti/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ilti::cli::main_entry(argc, argv, std::cout, std::cerr); }
