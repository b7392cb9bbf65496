#include <iostream>

#include "msqgt/cli.hpp"

int main(int argc, char** argv) { return msqgt::cli::run(argc, argv, std::cout, std::cerr); }
