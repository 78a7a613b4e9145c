#include <iostream>

#include "neurostrike/cli.hpp"

int main(int argc, char** argv) { return neurostrike::cli(argc, argv, std::cout, std::cerr); }
