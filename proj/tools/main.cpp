#include "driftlab/cli.hpp"

int main(int argc, char** argv) { return driftlab::cli_main(argc, argv); }
