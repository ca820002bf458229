#include <iostream>

#include "specdetect/cli.hpp"

int main(int argc, char** argv) { return specdetect::cli::run(argc, argv, std::cout, std::cerr); }
