#include <iostream>
#include <string>
#include <vector>

#include "sqha/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sqha::cli::run(std::move(args), std::cout, std::cerr);
}
