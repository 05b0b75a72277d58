#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return manger::cli::run(argc, argv, std::cout, std::cerr); }
