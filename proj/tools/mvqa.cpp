#include <iostream>

#include "mvqa/cli.hpp"

int main(int argc, char** argv) { return mvqa::run_cli(argc, argv, std::cout, std::cerr); }
