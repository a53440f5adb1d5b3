#include "radloc/cli.hpp"

int main(int argc, char** argv) { return radloc::cli::main(argc, argv); }
