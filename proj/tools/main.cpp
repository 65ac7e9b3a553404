#include <iostream>
#include <string>
#include <vector>

#include "tissuemix/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tissuemix::cli::run(args, std::cout, std::cerr);
}
