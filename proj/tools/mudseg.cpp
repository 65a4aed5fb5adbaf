#include <iostream>

#include "mudseg/cli.hpp"

int main(int argc, char** argv) { return mudseg::run_cli(argc, argv, std::cout, std::cerr); }
