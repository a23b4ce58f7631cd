#include <iostream>
#include <string>
#include <vector>

#include "scanleak/cli_runner.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return scanleak::run_cli(std::move(args), std::cout, std::cerr);
}
