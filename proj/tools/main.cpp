#include "hotelling/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <unistd.h>

namespace {

bool color_enabled() {
    return ::isatty(STDERR_FILENO) && std::getenv("NO_COLOR") == nullptr;
}

void print_error(const std::string& message) {
    if (color_enabled())
        std::cerr << "\033[31m" << message << "\033[0m\n";
    else
        std::cerr << message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const hotelling::CliInvocation invocation = hotelling::parse_and_validate(args);
        return hotelling::run_invocation(invocation, std::cout, std::cerr);
    } catch (const hotelling::CliHelp& help) {
        std::cout << help.text;
        return 0;
    } catch (const hotelling::CliUsageError& e) {
        print_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error(e.what());
        return 1;
    }
}
