#include "sdelab/cli.hpp"

int main(int argc, char** argv) { return sdelab::cliMain(argc, argv); }
