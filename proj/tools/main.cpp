#include <vector>

#include "pendulum/cli_app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return pendulum::cli::run_cli(args);
}
