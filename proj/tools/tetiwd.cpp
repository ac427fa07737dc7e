#include "tetiwd/cli.hpp"

int main(int argc, char** argv) { return tetiwd::cli::run_cli(argc, argv); }
