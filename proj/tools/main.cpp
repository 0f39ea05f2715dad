#include <iostream>
#include <string>
#include <vector>

#include "dyntok/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dyntok::cli_main(args, std::cout, std::cerr);
}
