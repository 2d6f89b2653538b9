#include "boxrepair/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return boxrepair::cli_main(argc, argv, std::cout, std::cerr); }
