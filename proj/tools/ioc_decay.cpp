#include "iocdecay/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return iocdecay::run_cli(argc, argv, std::cout, std::cerr);
}
