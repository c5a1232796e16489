#include "pkgc/cli.hpp"

int main(int argc, char** argv) { return pkgc::cli_main(argc, argv); }
