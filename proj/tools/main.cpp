#include <vector>

#include "medgrad/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return medgrad::run_cli(std::move(args));
}
