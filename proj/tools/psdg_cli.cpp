#include <iostream>

#include "psdg/cli.hpp"

int main(int argc, char** argv) { return psdg::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
