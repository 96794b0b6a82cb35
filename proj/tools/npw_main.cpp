#include <iostream>

#include "npw/cli.hpp"

int main(int argc, char** argv) { return npw::run_cli(argc, argv, std::cout, std::cerr); }
