#include "stopbound/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return stopbound::cli::run(argc, argv, std::cout, std::cerr); }
