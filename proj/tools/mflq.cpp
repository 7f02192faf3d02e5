#include <iostream>

#include "mflq/cli.hpp"

int main(int argc, char** argv) { return mflq::run_cli(argc, argv, std::cout, std::cerr); }
