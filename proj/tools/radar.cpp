#include "radar/cli/commands.hpp"

int main(int argc, char** argv) { return radar::cli::run_cli(argc, argv); }
