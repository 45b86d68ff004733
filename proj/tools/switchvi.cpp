#include "switchvi/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return switchvi::run_cli(argc, argv, std::cout, std::cerr);
}
