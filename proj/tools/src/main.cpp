#include <iostream>

#include "mottrw/cli/app.hpp"

int main(int argc, char** argv) { return mottrw::cli::run(argc, argv, std::cout, std::cerr); }
