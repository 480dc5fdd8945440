#include "nsdg/cli.hpp"

int main(int argc, char** argv) { return nsdg::cli_main(argc, argv); }
