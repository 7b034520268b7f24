#include "dkreg/cli.hpp"

int main(int argc, char** argv) { return dkreg::cli_main(argc, argv); }
