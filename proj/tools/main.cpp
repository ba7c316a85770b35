#include "cli.hpp"

int main(int argc, char** argv) { return fmflow::cli::main(argc, argv); }
