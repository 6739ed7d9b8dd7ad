#include "nrmc/cli.hpp"

int main(int argc, char** argv) { return nrmc::cli::main(argc, argv); }
