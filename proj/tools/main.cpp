#include <iostream>

#include "cora/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cora::run_cli(args, std::cout, std::cerr);
}
