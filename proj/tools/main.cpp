#include "kebio/cli/commands.hpp"

int main(int argc, char** argv) { return kebio::run_cli(argc, argv); }
