#include "cli.hpp"

int main(int argc, char** argv) { return simplebev::cli::cli_main(argc, argv); }
