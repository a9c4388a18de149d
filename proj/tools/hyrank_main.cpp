#include "hyrank/cli.hpp"

int main(int argc, char** argv) { return hyrank::run_cli(argc, argv); }
