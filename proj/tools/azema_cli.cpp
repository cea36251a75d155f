#include <iostream>

#include "azema/io/cli.hpp"

int main(int argc, char** argv) { return azema::io::cli_main(argc, argv, std::cout, std::cerr); }
