#include <vector>

#include "ganaug/cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ganaug::cli::dispatch(args);
}
