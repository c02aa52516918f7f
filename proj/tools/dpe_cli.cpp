#include <iostream>

#include "dpe/cli.hpp"

int main(int argc, char** argv) { return dpe::cli::run(argc, argv, std::cout, std::cerr); }
