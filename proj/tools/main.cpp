#include <iostream>
#include <string>
#include <vector>

#include "kerrsol/scenario.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return kerrsol::cli_main(args, std::cout, std::cerr);
}
