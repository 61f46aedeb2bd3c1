#include "nff/cli.hpp"

int main(int argc, char** argv) { return nff::cli::run(argc, argv); }
