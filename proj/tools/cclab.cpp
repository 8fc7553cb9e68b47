#include "cclab/cli.hpp"

int main(int argc, char** argv) { return cclab::cli_main(argc, argv); }
