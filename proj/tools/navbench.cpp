#include <iostream>

#include "dualnav/commands.hpp"

int main(int argc, char** argv) { return dualnav::cli::run(argc, argv, std::cout, std::cerr); }
