// SPDX-License-Identifier: MIT
#include <iostream>
#include <string>
#include <vector>

#include "gbsde/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gbsde::run_cli(args, std::cout, std::cerr);
}
