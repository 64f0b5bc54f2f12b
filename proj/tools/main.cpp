#include "etcbench/cli.hpp"

int main(int argc, char** argv) { return etcbench::run_cli(argc, argv); }
