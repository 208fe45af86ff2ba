#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return stepwise::cli::run(argc, argv, std::cout, std::cerr); }
